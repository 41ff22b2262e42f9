//! Networks, scenarios and dense conditional distributions.
//!
//! A distribution over `n` parties is stored as one flat vector indexed by
//! `x_index * num_outputs + a_index`, where both indices are row-major with
//! the first declared party most significant.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Normalization tolerance applied when a distribution is constructed.
pub const NORM_TOL: f64 = 1e-9;
/// Tolerance for comparisons after floating point arithmetic.
pub const ARITH_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Party {
    pub id: String,
    pub inputs: usize,
    pub outputs: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Source {
    pub id: String,
    pub parties: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Network {
    pub parties: Vec<Party>,
    pub sources: Vec<Source>,
}

fn party(id: &str, inputs: usize, outputs: usize) -> Party {
    Party { id: id.to_string(), inputs, outputs }
}

fn source(id: &str, parties: &[&str]) -> Source {
    Source {
        id: id.to_string(),
        parties: parties.iter().map(|p| p.to_string()).collect(),
    }
}

impl Network {
    /// Builds a network and rejects it if any structural invariant fails.
    pub fn new(parties: Vec<Party>, sources: Vec<Source>) -> Result<Self> {
        let net = Network { parties, sources };
        validate_network(&net).map_err(|errs| Error::InvalidNetwork(errs.join("; ")))?;
        Ok(net)
    }

    /// Triangle without inputs. Sources are `alpha` (B,C), `beta` (C,A) and
    /// `gamma` (A,B); each party's first slot receives the second half of one
    /// source and its second slot the first half of the next.
    pub fn triangle(outputs: usize) -> Self {
        Network {
            parties: vec![party("A", 1, outputs), party("B", 1, outputs), party("C", 1, outputs)],
            sources: vec![
                source("alpha", &["B", "C"]),
                source("beta", &["C", "A"]),
                source("gamma", &["A", "B"]),
            ],
        }
    }

    /// Bilocal chain A - B - C with sources `AB` and `BC`.
    pub fn bilocal(a: (usize, usize), b: (usize, usize), c: (usize, usize)) -> Self {
        Network {
            parties: vec![party("A", a.0, a.1), party("B", b.0, b.1), party("C", c.0, c.1)],
            sources: vec![source("AB", &["A", "B"]), source("BC", &["B", "C"])],
        }
    }

    /// Star with `m` branch parties around a central node. Party order is
    /// `[A1, B, A2, .., Am]` so that `star(2, ..)` has the bilocal layout.
    pub fn star(m: usize, branch_inputs: usize, branch_outputs: usize, center_outputs: usize) -> Self {
        let mut parties = vec![party("A1", branch_inputs, branch_outputs), party("B", 1, center_outputs)];
        for k in 2..=m {
            parties.push(party(&format!("A{k}"), branch_inputs, branch_outputs));
        }
        let sources = (1..=m)
            .map(|k| source(&format!("S{k}"), &[&format!("A{k}"), "B"]))
            .collect();
        Network { parties, sources }
    }

    /// Standard Bell scenario: one source shared by all `n` parties.
    pub fn bell(n: usize, inputs: usize, outputs: usize) -> Self {
        let ids: Vec<String> = (0..n).map(|k| ((b'A' + k as u8) as char).to_string()).collect();
        Network {
            parties: ids.iter().map(|id| party(id, inputs, outputs)).collect(),
            sources: vec![Source { id: "L".into(), parties: ids }],
        }
    }

    pub fn num_parties(&self) -> usize {
        self.parties.len()
    }

    pub fn party_index(&self, id: &str) -> Option<usize> {
        self.parties.iter().position(|p| p.id == id)
    }

    pub fn source_index(&self, id: &str) -> Option<usize> {
        self.sources.iter().position(|s| s.id == id)
    }

    /// Party indices attached to source `s`, in attachment order.
    pub fn source_parties(&self, s: usize) -> Vec<usize> {
        self.sources[s]
            .parties
            .iter()
            .filter_map(|id| self.party_index(id))
            .collect()
    }

    /// Source indices feeding party `j`, in source declaration order.
    pub fn party_sources(&self, j: usize) -> Vec<usize> {
        let id = &self.parties[j].id;
        (0..self.sources.len())
            .filter(|&s| self.sources[s].parties.iter().any(|p| p == id))
            .collect()
    }

    /// Sources attached to both parties.
    pub fn common_sources(&self, j: usize, k: usize) -> Vec<usize> {
        let sk = self.party_sources(k);
        self.party_sources(j).into_iter().filter(|s| sk.contains(s)).collect()
    }

    pub fn scenario(&self) -> Scenario {
        Scenario::new(self.parties.iter().map(|p| (p.inputs, p.outputs)).collect())
    }

    pub fn has_inputs(&self) -> bool {
        self.parties.iter().any(|p| p.inputs > 1)
    }
}

/// Returns every structural problem with `net`; `Ok` iff there are none.
pub fn validate_network(net: &Network) -> std::result::Result<(), Vec<String>> {
    let mut errs = Vec::new();
    let mut seen = HashSet::new();
    for p in &net.parties {
        if !seen.insert(p.id.as_str()) {
            errs.push(format!("duplicate party id '{}'", p.id));
        }
        if p.inputs < 1 {
            errs.push(format!("party '{}' needs at least one input", p.id));
        }
        if p.outputs < 2 {
            errs.push(format!("party '{}' needs at least two outputs", p.id));
        }
    }
    let mut seen_src = HashSet::new();
    for s in &net.sources {
        if !seen_src.insert(s.id.as_str()) {
            errs.push(format!("duplicate source id '{}'", s.id));
        }
        if s.parties.is_empty() {
            errs.push(format!("empty source '{}'", s.id));
        }
        let mut local = HashSet::new();
        for p in &s.parties {
            if !local.insert(p.as_str()) {
                errs.push(format!("source '{}' lists party '{}' twice", s.id, p));
            }
            if net.party_index(p).is_none() {
                errs.push(format!("source '{}' refers to unknown party '{}'", s.id, p));
            }
        }
    }
    for p in &net.parties {
        if !net.sources.iter().any(|s| s.parties.contains(&p.id)) {
            errs.push(format!("party '{}' is attached to no source", p.id));
        }
    }
    if errs.is_empty() {
        Ok(())
    } else {
        Err(errs)
    }
}

/// Input and output cardinality of one party.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shape {
    pub inputs: usize,
    pub outputs: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Scenario {
    pub parties: Vec<Shape>,
}

impl Scenario {
    pub fn new(shapes: Vec<(usize, usize)>) -> Self {
        Scenario {
            parties: shapes
                .into_iter()
                .map(|(inputs, outputs)| Shape { inputs, outputs })
                .collect(),
        }
    }

    /// Scenario with no inputs and the given output counts.
    pub fn no_input(outputs: &[usize]) -> Self {
        Self::new(outputs.iter().map(|&o| (1, o)).collect())
    }

    pub fn len(&self) -> usize {
        self.parties.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parties.is_empty()
    }

    pub fn inputs(&self) -> Vec<usize> {
        self.parties.iter().map(|s| s.inputs).collect()
    }

    pub fn outputs(&self) -> Vec<usize> {
        self.parties.iter().map(|s| s.outputs).collect()
    }

    pub fn num_inputs(&self) -> usize {
        self.parties.iter().map(|s| s.inputs).product()
    }

    pub fn num_outputs(&self) -> usize {
        self.parties.iter().map(|s| s.outputs).product()
    }

    pub fn size(&self) -> usize {
        self.num_inputs() * self.num_outputs()
    }

    pub fn has_inputs(&self) -> bool {
        self.parties.iter().any(|s| s.inputs > 1)
    }
}

/// Row-major mixed-radix encoding, first digit most significant.
pub fn encode(digits: &[usize], radix: &[usize]) -> usize {
    digits.iter().zip(radix).fold(0, |acc, (&d, &r)| acc * r + d)
}

/// Inverse of [`encode`].
pub fn decode(mut index: usize, radix: &[usize]) -> Vec<usize> {
    let mut out = vec![0; radix.len()];
    for k in (0..radix.len()).rev() {
        out[k] = index % radix[k];
        index /= radix[k];
    }
    out
}

/// Iterator over all digit tuples of a mixed radix, in row-major order.
pub fn tuples(radix: &[usize]) -> impl Iterator<Item = Vec<usize>> + '_ {
    let total: usize = radix.iter().product();
    (0..total).map(move |i| decode(i, radix))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    pub scenario: Scenario,
    pub probs: Vec<f64>,
}

impl Distribution {
    /// Checked constructor: entries must be non-negative and every input
    /// slice must sum to one within [`NORM_TOL`].
    pub fn new(scenario: Scenario, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != scenario.size() {
            return Err(Error::Dimension(format!(
                "distribution has {} entries, scenario needs {}",
                probs.len(),
                scenario.size()
            )));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidDistribution(format!("entry {p} is negative or not finite")));
        }
        let d = Distribution { scenario, probs };
        d.check_normalized()?;
        Ok(d)
    }

    /// Constructor for computed tensors: entries in `[-1e-12, 0)` are
    /// clamped to zero before the usual checks.
    pub fn from_computed(scenario: Scenario, mut probs: Vec<f64>) -> Result<Self> {
        for p in probs.iter_mut() {
            if *p < 0.0 && *p >= -ARITH_TOL {
                *p = 0.0;
            }
        }
        Self::new(scenario, probs)
    }

    fn check_normalized(&self) -> Result<()> {
        let no = self.scenario.num_outputs();
        for (xi, chunk) in self.probs.chunks(no).enumerate() {
            let s: f64 = chunk.iter().sum();
            if (s - 1.0).abs() > NORM_TOL {
                return Err(Error::InvalidDistribution(format!(
                    "input slice {xi} sums to {s}"
                )));
            }
        }
        Ok(())
    }

    /// Builds a distribution from a function of `(x, a)`.
    pub fn from_fn(scenario: Scenario, f: impl Fn(&[usize], &[usize]) -> f64) -> Result<Self> {
        let ins = scenario.inputs();
        let outs = scenario.outputs();
        let mut probs = Vec::with_capacity(scenario.size());
        for x in tuples(&ins) {
            for a in tuples(&outs) {
                probs.push(f(&x, &a));
            }
        }
        Self::from_computed(scenario, probs)
    }

    pub fn uniform(scenario: Scenario) -> Self {
        let w = 1.0 / scenario.num_outputs() as f64;
        let n = scenario.size();
        Distribution { scenario, probs: vec![w; n] }
    }

    /// Point mass on `outputs` for every input.
    pub fn deterministic(scenario: Scenario, outputs: &[usize]) -> Self {
        let no = scenario.num_outputs();
        let hit = encode(outputs, &scenario.outputs());
        let probs = (0..scenario.size()).map(|i| if i % no == hit { 1.0 } else { 0.0 }).collect();
        Distribution { scenario, probs }
    }

    pub fn num_parties(&self) -> usize {
        self.scenario.len()
    }

    pub fn index(&self, x: &[usize], a: &[usize]) -> usize {
        encode(x, &self.scenario.inputs()) * self.scenario.num_outputs() + encode(a, &self.scenario.outputs())
    }

    /// `p(a|x)`.
    pub fn p(&self, x: &[usize], a: &[usize]) -> f64 {
        self.probs[self.index(x, a)]
    }

    /// Output slice for one input assignment.
    pub fn slice(&self, x: &[usize]) -> &[f64] {
        let no = self.scenario.num_outputs();
        let start = encode(x, &self.scenario.inputs()) * no;
        &self.probs[start..start + no]
    }

    /// Convex combination `w * self + (1 - w) * other`.
    pub fn mix(&self, other: &Distribution, w: f64) -> Result<Distribution> {
        if self.scenario != other.scenario {
            return Err(Error::Dimension("mixing distributions on different scenarios".into()));
        }
        let probs = self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(p, q)| w * p + (1.0 - w) * q)
            .collect();
        Distribution::from_computed(self.scenario.clone(), probs)
    }

    /// Total variation distance, half the l1 distance over all entries.
    pub fn tv_distance(&self, other: &Distribution) -> f64 {
        0.5 * self.probs.iter().zip(&other.probs).map(|(p, q)| (p - q).abs()).sum::<f64>()
    }

    /// Relabels the outputs of `party` by `perm[a]`.
    pub fn relabel_outputs(&self, party: usize, perm: &[usize]) -> Distribution {
        let ins = self.scenario.inputs();
        let outs = self.scenario.outputs();
        let mut probs = vec![0.0; self.probs.len()];
        for x in tuples(&ins) {
            for a in tuples(&outs) {
                let mut b = a.clone();
                b[party] = perm[a[party]];
                probs[self.index(&x, &b)] = self.p(&x, &a);
            }
        }
        Distribution { scenario: self.scenario.clone(), probs }
    }

    /// Outer product of independent distributions, parties concatenated.
    pub fn product(parts: &[Distribution]) -> Distribution {
        let mut shapes = Vec::new();
        for d in parts {
            shapes.extend(d.scenario.parties.iter().map(|s| (s.inputs, s.outputs)));
        }
        let scenario = Scenario::new(shapes);
        let ins = scenario.inputs();
        let outs = scenario.outputs();
        let mut probs = Vec::with_capacity(scenario.size());
        for x in tuples(&ins) {
            for a in tuples(&outs) {
                let mut off = 0;
                let mut v = 1.0;
                for d in parts {
                    let n = d.num_parties();
                    v *= d.p(&x[off..off + n], &a[off..off + n]);
                    off += n;
                }
                probs.push(v);
            }
        }
        Distribution { scenario, probs }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("distribution serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: Distribution = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        Distribution::new(raw.scenario, raw.probs)
    }
}

/// Marginal on the parties in `keep` at the full input assignment `x`,
/// returned as a no-input distribution over the kept parties in the order given.
pub fn marginal(d: &Distribution, keep: &[usize], x: &[usize]) -> Result<Distribution> {
    if keep.is_empty() {
        return Err(Error::InvalidArgument("marginal over an empty party set".into()));
    }
    if x.len() != d.num_parties() {
        return Err(Error::InvalidArgument("input assignment must cover every party".into()));
    }
    let outs = d.scenario.outputs();
    for &k in keep {
        if k >= outs.len() {
            return Err(Error::InvalidArgument(format!("party index {k} out of range")));
        }
    }
    let kept: Vec<usize> = keep.iter().map(|&k| outs[k]).collect();
    let mut probs = vec![0.0; kept.iter().product()];
    for (ai, a) in tuples(&outs).enumerate() {
        let sub: Vec<usize> = keep.iter().map(|&k| a[k]).collect();
        probs[encode(&sub, &kept)] += d.slice(x)[ai];
    }
    Distribution::from_computed(Scenario::no_input(&kept), probs)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoSignalingReport {
    pub max_deviation: f64,
    pub passed: bool,
}

/// Largest change of the other parties' marginal when one party's input varies.
pub fn no_signaling_check(d: &Distribution, tol: f64) -> NoSignalingReport {
    let ins = d.scenario.inputs();
    let outs = d.scenario.outputs();
    let n = d.num_parties();
    let mut worst: f64 = 0.0;
    for j in 0..n {
        if ins[j] < 2 {
            continue;
        }
        let others: Vec<usize> = (0..n).filter(|&k| k != j).collect();
        if others.is_empty() {
            continue;
        }
        let other_outs: Vec<usize> = others.iter().map(|&k| outs[k]).collect();
        for x in tuples(&ins) {
            if x[j] != 0 {
                continue;
            }
            let base = marginal_vec(d, &others, &x, &other_outs);
            for xj in 1..ins[j] {
                let mut y = x.clone();
                y[j] = xj;
                let m = marginal_vec(d, &others, &y, &other_outs);
                for (p, q) in base.iter().zip(&m) {
                    worst = worst.max((p - q).abs());
                }
            }
        }
    }
    NoSignalingReport { max_deviation: worst, passed: worst <= tol }
}

fn marginal_vec(d: &Distribution, keep: &[usize], x: &[usize], kept_outs: &[usize]) -> Vec<f64> {
    let outs = d.scenario.outputs();
    let mut v = vec![0.0; kept_outs.iter().product()];
    for (ai, a) in tuples(&outs).enumerate() {
        let sub: Vec<usize> = keep.iter().map(|&k| a[k]).collect();
        v[encode(&sub, kept_outs)] += d.slice(x)[ai];
    }
    v
}

/// Max-norm deviation of the two-party marginal from the product of its
/// one-party marginals, over all input assignments.
pub fn conditional_independence_gap(d: &Distribution, p1: usize, p2: usize) -> Result<f64> {
    if p1 == p2 {
        return Err(Error::InvalidArgument("independence gap needs two distinct parties".into()));
    }
    let n = d.num_parties();
    if p1 >= n || p2 >= n {
        return Err(Error::InvalidArgument("party index out of range".into()));
    }
    let outs = d.scenario.outputs();
    let (o1, o2) = (outs[p1], outs[p2]);
    let mut worst: f64 = 0.0;
    for x in tuples(&d.scenario.inputs()) {
        let joint = marginal_vec(d, &[p1, p2], &x, &[o1, o2]);
        let m1 = marginal_vec(d, &[p1], &x, &[o1]);
        let m2 = marginal_vec(d, &[p2], &x, &[o2]);
        for a in 0..o1 {
            for b in 0..o2 {
                worst = worst.max((joint[a * o2 + b] - m1[a] * m2[b]).abs());
            }
        }
    }
    Ok(worst)
}

/// `<prod_{k in subset} (-1)^{a_k}>` at input assignment `x`.
pub fn correlator(d: &Distribution, subset: &[usize], x: &[usize]) -> Result<f64> {
    let outs = d.scenario.outputs();
    for &k in subset {
        if k >= outs.len() {
            return Err(Error::InvalidArgument(format!("party index {k} out of range")));
        }
        if outs[k] != 2 {
            return Err(Error::InvalidArgument(format!(
                "correlator needs binary outputs, party {k} has {}",
                outs[k]
            )));
        }
    }
    let mut v = 0.0;
    for (ai, a) in tuples(&outs).enumerate() {
        let parity: usize = subset.iter().map(|&k| a[k]).sum();
        let s = if parity % 2 == 0 { 1.0 } else { -1.0 };
        v += s * d.slice(x)[ai];
    }
    Ok(v)
}

/// Every correlator of a binary-output distribution, keyed by
/// (party subset, inputs of those parties).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CorrelatorSet {
    pub values: BTreeMap<(Vec<usize>, Vec<usize>), f64>,
}

impl CorrelatorSet {
    pub fn from_distribution(d: &Distribution) -> Result<Self> {
        let n = d.num_parties();
        let ins = d.scenario.inputs();
        let mut values = BTreeMap::new();
        for mask in 1usize..(1 << n) {
            let subset: Vec<usize> = (0..n).filter(|k| mask >> k & 1 == 1).collect();
            let sub_ins: Vec<usize> = subset.iter().map(|&k| ins[k]).collect();
            for xs in tuples(&sub_ins) {
                let mut x = vec![0; n];
                for (k, &p) in subset.iter().enumerate() {
                    x[p] = xs[k];
                }
                values.insert((subset.clone(), xs), correlator(d, &subset, &x)?);
            }
        }
        Ok(CorrelatorSet { values })
    }

    pub fn get(&self, subset: &[usize], inputs: &[usize]) -> Option<f64> {
        self.values.get(&(subset.to_vec(), inputs.to_vec())).copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ghz() -> Distribution {
        let mut p = vec![0.0; 8];
        p[0] = 0.5;
        p[7] = 0.5;
        Distribution::new(Scenario::no_input(&[2, 2, 2]), p).unwrap()
    }

    #[test]
    fn preset_networks_validate() {
        assert!(validate_network(&Network::triangle(2)).is_ok());
        assert!(validate_network(&Network::bilocal((2, 2), (1, 4), (2, 2))).is_ok());
        assert!(validate_network(&Network::star(4, 2, 2, 16)).is_ok());
        assert!(validate_network(&Network::bell(3, 2, 2)).is_ok());
    }

    #[test]
    fn empty_source_is_reported() {
        let mut net = Network::triangle(2);
        net.sources.push(Source { id: "x".into(), parties: vec![] });
        let errs = validate_network(&net).unwrap_err();
        assert!(errs.iter().any(|e| e.contains("empty source")));
    }

    #[test]
    fn detached_party_and_duplicates_are_reported() {
        let mut net = Network::bilocal((2, 2), (1, 4), (2, 2));
        net.parties.push(party("D", 1, 2));
        net.sources[0].parties.push("A".into());
        let errs = validate_network(&net).unwrap_err();
        assert_eq!(errs.len(), 2, "{errs:?}");
    }

    #[test]
    fn index_layout_is_row_major_inputs_first() {
        let sc = Scenario::new(vec![(2, 2), (3, 2)]);
        let d = Distribution::uniform(sc);
        assert_eq!(d.index(&[0, 0], &[0, 0]), 0);
        assert_eq!(d.index(&[0, 0], &[1, 0]), 2);
        assert_eq!(d.index(&[0, 1], &[0, 0]), 4);
        assert_eq!(d.index(&[1, 0], &[0, 1]), 13);
    }

    #[test]
    fn ghz_marginal_on_two_parties() {
        let m = marginal(&ghz(), &[0, 1], &[0, 0, 0]).unwrap();
        assert_eq!(m.probs, vec![0.5, 0.0, 0.0, 0.5]);
    }

    #[test]
    fn marginal_keeping_everything_is_identity() {
        let d = ghz();
        assert_eq!(marginal(&d, &[0, 1, 2], &[0, 0, 0]).unwrap().probs, d.probs);
        assert!(marginal(&d, &[], &[0, 0, 0]).is_err());
    }

    #[test]
    fn signaling_tensor_deviates_by_one() {
        // p(a = y | x, y) = 1
        let sc = Scenario::new(vec![(2, 2), (2, 2)]);
        let d = Distribution::from_fn(sc, |x, a| if a[0] == x[1] { 0.5 } else { 0.0 }).unwrap();
        let r = no_signaling_check(&d, 1e-9);
        assert!((r.max_deviation - 1.0).abs() < 1e-15);
        assert!(!r.passed);
    }

    #[test]
    fn ghz_gap_and_correlator() {
        let d = ghz();
        assert!((conditional_independence_gap(&d, 0, 1).unwrap() - 0.25).abs() < 1e-15);
        assert!(conditional_independence_gap(&d, 1, 1).is_err());
        assert_eq!(correlator(&d, &[0, 1], &[0, 0, 0]).unwrap(), 1.0);
        assert_eq!(correlator(&d, &[0], &[0, 0, 0]).unwrap(), 0.0);
    }

    #[test]
    fn correlator_rejects_non_binary() {
        let d = Distribution::uniform(Scenario::no_input(&[2, 4]));
        assert!(correlator(&d, &[1], &[0, 0]).is_err());
    }

    #[test]
    fn construction_rejects_bad_tensors() {
        let sc = Scenario::no_input(&[2]);
        assert!(Distribution::new(sc.clone(), vec![0.6, 0.6]).is_err());
        assert!(Distribution::new(sc.clone(), vec![1.1, -0.1]).is_err());
        assert!(Distribution::new(sc, vec![1.0]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let d = ghz();
        let back = Distribution::from_json(&d.to_json()).unwrap();
        assert_eq!(back, d);
        let net = Network::triangle(4);
        let s = serde_json::to_string(&net).unwrap();
        assert!(s.contains("\"sources\""));
        assert_eq!(serde_json::from_str::<Network>(&s).unwrap(), net);
    }

    #[test]
    fn correlator_set_lists_all_subsets() {
        let cs = CorrelatorSet::from_distribution(&ghz()).unwrap();
        assert_eq!(cs.values.len(), 7);
        assert_eq!(cs.get(&[0, 2], &[0, 0]), Some(1.0));
    }
}
