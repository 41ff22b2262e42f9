//! `netbell`: distributions, inequality tests, compatibility LPs, covariance
//! decompositions, local-model search and parameter sweeps.
//!
//! Exit codes: 0 satisfied or compatible, 1 violated or infeasible, 2
//! inconclusive (a heuristic search found nothing), 3 input error.

mod commands;
mod methods;
mod resolve;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use commands::*;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "netbell", version, about = "Correlations in networks with independent sources")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List the distribution registry or print one entry as JSON.
    Zoo(ZooArgs),
    /// Born distribution of a quantum strategy, as JSON.
    Simulate(SimulateArgs),
    /// Evaluate one test on one distribution.
    Eval(EvalArgs),
    /// Inflation compatibility LP.
    Inflate(InflateArgs),
    /// Entropy vector, network entropy LP and entropic tests.
    Entropy(EntropyArgs),
    /// Covariance decomposition test, or a scan of the p_pq family.
    Covariance(CovarianceArgs),
    /// Search for an explicit network-local model.
    Localfit(LocalfitArgs),
    /// Evaluate a test over a parameter grid and write CSV.
    Sweep(SweepArgs),
    /// Run the "pipeline" section of a JSON config; trailing flags override it.
    Run(RunArgs),
}

#[derive(clap::Args, Debug)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Flags passed to the pipeline command after the config's own.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
    overrides: Vec<String>,
}

/// Expands a config's pipeline section into an argument list. Keys become
/// `--key value`; `true` becomes a bare flag; arrays are comma joined. Keys
/// also given in `overrides` are dropped so the command line wins.
fn pipeline_args(config: &serde_json::Value, overrides: &[String]) -> Result<Vec<String>> {
    let pipe = config
        .get("pipeline")
        .and_then(|p| p.as_object())
        .context("config needs a \"pipeline\" object")?;
    let command = pipe
        .get("command")
        .and_then(|c| c.as_str())
        .context("pipeline needs a \"command\" string")?;
    if command == "run" {
        bail!("a pipeline cannot run another pipeline");
    }
    let overridden = |flag: &str| overrides.iter().any(|o| o == flag || o.starts_with(&format!("{flag}=")));
    let scalar = |v: &serde_json::Value| -> Result<String> {
        match v {
            serde_json::Value::String(s) => Ok(s.clone()),
            serde_json::Value::Number(n) => Ok(n.to_string()),
            other => bail!("unsupported pipeline value {other}"),
        }
    };
    let mut args = vec!["netbell".to_string(), command.to_string()];
    for (key, v) in pipe {
        if key == "command" {
            continue;
        }
        if key == "name" {
            args.push(scalar(v)?);
            continue;
        }
        let flag = format!("--{}", key.replace('_', "-"));
        if overridden(&flag) {
            continue;
        }
        match v {
            serde_json::Value::Bool(true) => args.push(flag),
            serde_json::Value::Bool(false) | serde_json::Value::Null => {}
            serde_json::Value::Array(items) => {
                let parts: Result<Vec<String>> = items.iter().map(scalar).collect();
                args.push(flag);
                args.push(parts?.join(","));
            }
            other => {
                args.push(flag);
                args.push(scalar(other)?);
            }
        }
    }
    args.extend(overrides.iter().cloned());
    Ok(args)
}

fn dispatch(cmd: Command) -> Result<methods::Verdict> {
    match cmd {
        Command::Zoo(a) => zoo(a),
        Command::Simulate(a) => simulate(a),
        Command::Eval(a) => eval(a),
        Command::Inflate(a) => inflate(a),
        Command::Entropy(a) => entropy(a),
        Command::Covariance(a) => covariance(a),
        Command::Localfit(a) => localfit(a),
        Command::Sweep(a) => sweep(a),
        Command::Run(r) => {
            let text = std::fs::read_to_string(&r.config).with_context(|| format!("reading {}", r.config.display()))?;
            let cfg: serde_json::Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", r.config.display()))?;
            let cli = Cli::try_parse_from(pipeline_args(&cfg, &r.overrides)?)?;
            dispatch(cli.command)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(3);
        }
    };
    match dispatch(cli.command) {
        Ok(v) => ExitCode::from(v.exit_code()),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pipeline_flags_and_overrides() {
        let cfg = serde_json::json!({
            "pipeline": { "command": "sweep", "ineq": "brgp", "param": "v", "step": 0.05, "boundary": false }
        });
        let args = pipeline_args(&cfg, &["--step".into(), "0.1".into()]).unwrap();
        assert_eq!(args, ["netbell", "sweep", "--ineq", "brgp", "--param", "v", "--step", "0.1"]);
        assert!(Cli::try_parse_from(args).is_ok());
    }

    #[test]
    fn pipeline_needs_a_command() {
        assert!(pipeline_args(&serde_json::json!({ "pipeline": {} }), &[]).is_err());
        assert!(pipeline_args(&serde_json::json!({}), &[]).is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
