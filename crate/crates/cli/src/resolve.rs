//! Turning command-line names into distributions, networks and strategies.

use anyhow::{bail, Context, Result};
use clap::Args;
use netbell_core::model::Shape;
use netbell_core::quantum::{born, presets, StrategyConfig};
use netbell_core::{zoo, Distribution, Network, QuantumStrategy, Scenario};
use std::path::Path;

#[derive(Args, Debug, Clone)]
pub struct SourceArgs {
    /// Zoo name (see `netbell zoo`) or path to a distribution JSON file.
    #[arg(long)]
    pub dist: Option<String>,
    /// Strategy preset or path to a strategy JSON file; its Born distribution is used.
    #[arg(long)]
    pub strategy: Option<String>,
    /// Per-source visibility applied to strategy presets.
    #[arg(long, visible_alias = "v", default_value_t = 1.0)]
    pub visibility: f64,
}

fn read(path: &str) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {path}"))
}

fn is_file(name: &str) -> bool {
    Path::new(name).is_file()
}

pub fn strategy(name: &str, v: f64) -> Result<QuantumStrategy> {
    if is_file(name) {
        let cfg: StrategyConfig =
            serde_json::from_str(&read(name)?).with_context(|| format!("parsing strategy file {name}"))?;
        return Ok(cfg.build()?);
    }
    presets::by_name(name, v).with_context(|| format!("strategy presets: {}", presets::NAMES.join(", ")))
}

pub fn distribution_by_name(name: &str) -> Result<Distribution> {
    if is_file(name) {
        return Ok(Distribution::from_json(&read(name)?).with_context(|| format!("parsing distribution file {name}"))?);
    }
    zoo::by_name(name).with_context(|| format!("zoo names: {}", zoo::NAMES.join(", ")))
}

impl SourceArgs {
    /// The distribution and, for strategies, the network it lives on.
    pub fn resolve(&self) -> Result<(Distribution, Option<Network>)> {
        match (&self.dist, &self.strategy) {
            (Some(_), Some(_)) => bail!("give either --dist or --strategy, not both"),
            (Some(d), None) => Ok((distribution_by_name(d)?, None)),
            (None, Some(s)) => {
                let st = strategy(s, self.visibility)?;
                Ok((born(&st)?, Some(st.network)))
            }
            (None, None) => bail!("a distribution is required: --dist or --strategy"),
        }
    }
}

fn reshape(mut net: Network, sc: &Scenario) -> Result<Network> {
    if net.parties.len() != sc.parties.len() {
        bail!("network has {} parties, distribution has {}", net.parties.len(), sc.parties.len());
    }
    for (p, Shape { inputs, outputs }) in net.parties.iter_mut().zip(&sc.parties) {
        p.inputs = *inputs;
        p.outputs = *outputs;
    }
    Ok(net)
}

/// Network by name (`triangle`, `bilocal`, `bell`, `star:<m>`) shaped to
/// `d`, or read from a JSON file.
pub fn network(name: &str, d: &Distribution) -> Result<Network> {
    if is_file(name) {
        let net: Network = serde_json::from_str(&read(name)?).with_context(|| format!("parsing network file {name}"))?;
        let net = Network::new(net.parties, net.sources)?;
        if net.scenario() != d.scenario {
            bail!("network file {name} does not match the distribution's scenario");
        }
        return Ok(net);
    }
    let n = d.num_parties();
    let template = match name {
        "triangle" => Network::triangle(2),
        "bilocal" => Network::bilocal((1, 2), (1, 2), (1, 2)),
        "bell" => Network::bell(n, 1, 2),
        other => match other.strip_prefix("star:") {
            Some(m) => Network::star(m.parse().with_context(|| format!("bad star size '{m}'"))?, 1, 2, 2),
            None => bail!("unknown network '{other}' (triangle, bilocal, bell, star:<m> or a JSON file)"),
        },
    };
    reshape(template, &d.scenario)
}

/// Explicit `--network`, else the strategy's network, else the triangle for
/// three parties without inputs and the Bell network otherwise.
pub fn network_or_default(name: Option<&str>, d: &Distribution, from_strategy: Option<Network>) -> Result<Network> {
    match (name, from_strategy) {
        (Some(n), _) => network(n, d),
        (None, Some(net)) => Ok(net),
        (None, None) if d.num_parties() == 3 && !d.scenario.has_inputs() => network("triangle", d),
        (None, None) => network("bell", d),
    }
}
