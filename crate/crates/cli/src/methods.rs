//! Named tests that map a distribution to a value and a verdict. Shared by
//! `eval` and `sweep`.

use anyhow::{bail, Result};
use netbell_core::covariance::{self, DykstraOptions, Embedding};
use netbell_core::inequalities::{self as iq, ModelClass, TGB_AUX_TOL};
use netbell_core::inflation::{test_compatibility, CompatibilityOptions, InflationSpec};
use netbell_core::{entropic, Distribution, InequalityResult, Network};
use std::collections::BTreeMap;

pub const NAMES: &[&str] = &[
    "chsh",
    "brgp",
    "tgb",
    "star:<m>",
    "mermin",
    "svetlichny",
    "finner-triangle",
    "ns-triangle",
    "triangle-entropy",
    "bilocal-entropy",
    "covariance",
    "inflation:<cut|web|ring:6>",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Satisfied,
    Violated,
    Inconclusive,
}

impl Verdict {
    pub fn exit_code(self) -> u8 {
        match self {
            Verdict::Satisfied => 0,
            Verdict::Violated => 1,
            Verdict::Inconclusive => 2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Verdict::Satisfied => "satisfied",
            Verdict::Violated => "violated",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub verdict: Verdict,
    pub aux: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

impl From<InequalityResult> for Evaluation {
    fn from(r: InequalityResult) -> Self {
        let verdict = if r.satisfied { Verdict::Satisfied } else { Verdict::Violated };
        Evaluation { name: r.name, value: r.value, bound: r.bound, verdict, aux: r.auxiliary, notes: r.notes }
    }
}

/// `pm1` when every party is binary, else one-hot.
pub fn default_embedding(d: &Distribution) -> Result<Embedding> {
    let outs = d.scenario.outputs();
    if outs.iter().all(|&o| o == 2) {
        Ok(Embedding::pm1(&outs)?)
    } else {
        Ok(Embedding::one_hot(&outs))
    }
}

pub fn embedding(name: Option<&str>, d: &Distribution) -> Result<Embedding> {
    match name {
        None => default_embedding(d),
        Some("onehot") | Some("one-hot") => Ok(Embedding::one_hot(&d.scenario.outputs())),
        Some("pm1") => Ok(Embedding::pm1(&d.scenario.outputs())?),
        Some(other) => bail!("unknown embedding '{other}' (onehot or pm1)"),
    }
}

pub struct Context<'a> {
    pub network: &'a Network,
    pub class: ModelClass,
    pub embedding: Option<&'a str>,
    pub dykstra: DykstraOptions,
}

pub fn evaluate(method: &str, d: &Distribution, ctx: &Context) -> Result<Evaluation> {
    let r: Evaluation = match method {
        "chsh" => iq::chsh(d)?.into(),
        "brgp" => iq::brgp(d)?.into(),
        "tgb" => {
            let mut e: Evaluation = iq::tgb(d)?.into();
            if e.aux.get("max_aux").is_some_and(|&m| m >= TGB_AUX_TOL) {
                e.verdict = Verdict::Inconclusive;
            }
            e
        }
        "mermin" => iq::mermin(d, ctx.class)?.into(),
        "svetlichny" => iq::svetlichny(d, ctx.class)?.into(),
        "finner-triangle" | "finner" => iq::finner_triangle(d)?.into(),
        "ns-triangle" | "ns" => iq::ns_triangle(d)?.into(),
        "triangle-entropy" | "entropy" => entropic::check_triangle_entropy(d)?.into(),
        "bilocal-entropy" => entropic::check_bilocal_entropy(d)?.into(),
        "covariance" | "cov" => {
            let e = embedding(ctx.embedding, d)?;
            let r = covariance::test_distribution(d, ctx.network, &e, ctx.dykstra)?;
            let mut aux = BTreeMap::new();
            aux.insert("iterations".to_string(), r.iterations as f64);
            Evaluation {
                name: "covariance".into(),
                value: r.residual,
                bound: ctx.dykstra.tol,
                verdict: if r.feasible { Verdict::Satisfied } else { Verdict::Violated },
                aux,
                notes: vec![covariance::regime(ctx.network).to_string()],
            }
        }
        other => {
            if let Some(m) = other.strip_prefix("star:") {
                let m: usize = m.parse().map_err(|_| anyhow::anyhow!("bad star size '{m}'"))?;
                iq::star(d, m)?.into()
            } else if let Some(spec) = other.strip_prefix("inflation:") {
                let spec = InflationSpec::preset(spec, ctx.network)?;
                let r = test_compatibility(d, ctx.network, &spec, CompatibilityOptions::default())?;
                Evaluation {
                    name: other.to_string(),
                    value: if r.feasible { 0.0 } else { 1.0 },
                    bound: 0.0,
                    verdict: if r.feasible { Verdict::Satisfied } else { Verdict::Violated },
                    aux: BTreeMap::new(),
                    notes: vec![r.verdict],
                }
            } else {
                bail!("unknown method '{other}' (one of {})", NAMES.join(", "))
            }
        }
    };
    Ok(r)
}

/// Strategy preset matching an inequality, used when sweeping visibility.
pub fn default_strategy(method: &str) -> Option<String> {
    match method {
        "chsh" => Some("chsh".into()),
        "brgp" => Some("bsm-default".into()),
        "tgb" => Some("ejm-default".into()),
        "mermin" | "svetlichny" => Some("mermin-ghz".into()),
        other => other.strip_prefix("star:").map(|m| format!("star:{m}")),
    }
}
