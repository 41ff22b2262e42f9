//! Inflation of networks into linear programs.
//!
//! An inflation copies sources and parties. A set of party-copies is
//! expressible when each of its connected components (parties linked by a
//! shared source-copy) is a faithful copy of part of the original network:
//! no original party twice and one copy index per source. Its joint outcome
//! distribution is then pinned to the product, over components, of the
//! original marginals. Only maximal expressible sets are pinned since their
//! marginals imply the rest.

use std::collections::{BTreeMap, HashMap, HashSet};

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{self, rationalize, LpProblem, LpResult};
use crate::model::{decode, encode, marginal, Distribution, Network};

/// Largest number of joint outcomes of the inflated parties we enumerate.
pub const MAX_JOINT_OUTCOMES: usize = 1 << 22;

/// One party-copy of a non-fanout wiring.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WiredCopy {
    pub party: String,
    /// Copy index per incident source id.
    pub sources: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InflationSpec {
    pub copies: BTreeMap<String, usize>,
    pub fanout: bool,
    #[serde(default)]
    pub wiring: Vec<WiredCopy>,
}

impl InflationSpec {
    pub fn fanout(net: &Network, copies: &[usize]) -> Self {
        InflationSpec {
            copies: net.sources.iter().map(|s| s.id.clone()).zip(copies.iter().copied()).collect(),
            fanout: true,
            wiring: Vec::new(),
        }
    }

    /// Named inflations of the triangle: `cut`, `web` and `ring:6`.
    pub fn preset(name: &str, net: &Network) -> Result<Self> {
        let tri = Network::triangle(2);
        let same_shape = net.sources.len() == 3
            && net.parties.len() == 3
            && (0..3).all(|s| net.source_parties(s) == tri.source_parties(s));
        if !same_shape {
            return Err(Error::InvalidArgument(format!("inflation preset '{name}' is defined for the triangle only")));
        }
        match name {
            "cut" => Ok(Self::fanout(net, &[1, 1, 2])),
            "web" => Ok(Self::fanout(net, &[2, 2, 2])),
            "ring:6" | "ring" => {
                // A(b0,g0) B(g0,a0) C(a0,b1) A(b1,g1) B(g1,a1) C(a1,b0)
                let ids: Vec<&str> = net.sources.iter().map(|s| s.id.as_str()).collect();
                let (al, be, ga) = (ids[0], ids[1], ids[2]);
                let p = |j: usize| net.parties[j].id.clone();
                let w = |party: String, pairs: [(&str, usize); 2]| WiredCopy {
                    party,
                    sources: pairs.iter().map(|(s, c)| (s.to_string(), *c)).collect(),
                };
                Ok(InflationSpec {
                    copies: ids.iter().map(|s| (s.to_string(), 2)).collect(),
                    fanout: false,
                    wiring: vec![
                        w(p(0), [(be, 0), (ga, 0)]),
                        w(p(1), [(ga, 0), (al, 0)]),
                        w(p(2), [(al, 0), (be, 1)]),
                        w(p(0), [(be, 1), (ga, 1)]),
                        w(p(1), [(ga, 1), (al, 1)]),
                        w(p(2), [(al, 1), (be, 0)]),
                    ],
                })
            }
            other => Err(Error::UnknownName(format!("inflation '{other}'"))),
        }
    }
}

/// A party-copy: original party and one copy index per incident source.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PartyCopy {
    pub party: usize,
    /// `(source, copy)` in the party's source order.
    pub sources: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpressibleSet {
    /// Party-copy indices, increasing.
    pub members: Vec<usize>,
    /// Connected components as party-copy indices.
    pub components: Vec<Vec<usize>>,
}

#[derive(Debug, Clone)]
pub struct InflatedNetwork {
    pub network: Network,
    pub spec: InflationSpec,
    pub copies: Vec<PartyCopy>,
    /// Permutations of party-copies induced by per-source copy relabelings
    /// that map the inflation onto itself (the whole group, identity first).
    pub symmetries: Vec<Vec<usize>>,
}

impl InflatedNetwork {
    pub fn label(&self, c: usize) -> String {
        let pc = &self.copies[c];
        let idx: Vec<String> = pc.sources.iter().map(|(_, k)| (k + 1).to_string()).collect();
        format!("{}^{{{}}}", self.network.parties[pc.party].id, idx.join(","))
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out.sort();
    out
}

pub fn build_inflation(net: &Network, spec: &InflationSpec) -> Result<InflatedNetwork> {
    let ns = net.sources.len();
    let mut counts = vec![0usize; ns];
    for (id, &c) in &spec.copies {
        let s = net
            .source_index(id)
            .ok_or_else(|| Error::InvalidArgument(format!("inflation names unknown source '{id}'")))?;
        if c == 0 {
            return Err(Error::InvalidArgument(format!("source '{id}' needs at least one copy")));
        }
        counts[s] = c;
    }
    if let Some(s) = counts.iter().position(|&c| c == 0) {
        return Err(Error::InvalidArgument(format!("no copy count for source '{}'", net.sources[s].id)));
    }
    let mut copies = Vec::new();
    if spec.fanout {
        if !spec.wiring.is_empty() {
            return Err(Error::InvalidArgument("fanout inflations take no explicit wiring".into()));
        }
        for j in 0..net.num_parties() {
            let srcs = net.party_sources(j);
            let radix: Vec<usize> = srcs.iter().map(|&s| counts[s]).collect();
            let total: usize = radix.iter().product();
            for k in 0..total {
                let cs = decode(k, &radix);
                copies.push(PartyCopy { party: j, sources: srcs.iter().copied().zip(cs).collect() });
            }
        }
    } else {
        if spec.wiring.is_empty() {
            return Err(Error::InvalidArgument("non-fanout inflation needs an explicit wiring".into()));
        }
        let mut used: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for w in &spec.wiring {
            let j = net
                .party_index(&w.party)
                .ok_or_else(|| Error::InvalidArgument(format!("wiring names unknown party '{}'", w.party)))?;
            let srcs = net.party_sources(j);
            if w.sources.len() != srcs.len() {
                return Err(Error::InvalidArgument(format!(
                    "copy of '{}' must consume exactly one copy of each incident source",
                    w.party
                )));
            }
            let mut pairs = Vec::new();
            for &s in &srcs {
                let c = *w.sources.get(&net.sources[s].id).ok_or_else(|| {
                    Error::InvalidArgument(format!("copy of '{}' misses source '{}'", w.party, net.sources[s].id))
                })?;
                if c >= counts[s] {
                    return Err(Error::InvalidArgument(format!("copy {c} of '{}' does not exist", net.sources[s].id)));
                }
                pairs.push((s, c));
                used.entry((s, c)).or_default().push(j);
            }
            let pc = PartyCopy { party: j, sources: pairs };
            if copies.contains(&pc) {
                return Err(Error::InvalidArgument(format!("duplicate copy of '{}' in wiring", w.party)));
            }
            copies.push(pc);
        }
        // without fanout a source copy reaches each of its parties at most once
        for ((s, c), parties) in &used {
            let mut seen = HashSet::new();
            if parties.iter().any(|p| !seen.insert(*p)) {
                return Err(Error::InvalidArgument(format!(
                    "copy {c} of source '{}' is sent twice to the same party",
                    net.sources[*s].id
                )));
            }
        }
    }
    let index: HashMap<&PartyCopy, usize> = copies.iter().enumerate().map(|(i, c)| (c, i)).collect();
    // product of symmetric groups on each source's copies
    let per_source: Vec<Vec<Vec<usize>>> = counts.iter().map(|&c| permutations(c)).collect();
    let sizes: Vec<usize> = per_source.iter().map(|p| p.len()).collect();
    let group_size: usize = sizes.iter().product();
    let mut symmetries = Vec::new();
    for g in 0..group_size {
        let choice = decode(g, &sizes);
        let mut perm = Vec::with_capacity(copies.len());
        let mut ok = true;
        for pc in &copies {
            let image = PartyCopy {
                party: pc.party,
                sources: pc.sources.iter().map(|&(s, c)| (s, per_source[s][choice[s]][c])).collect(),
            };
            match index.get(&image) {
                Some(&i) => perm.push(i),
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            symmetries.push(perm);
        }
    }
    Ok(InflatedNetwork { network: net.clone(), spec: spec.clone(), copies, symmetries })
}

/// Splits `members` into components linked by shared source-copies and
/// returns them if every component is injectable.
fn injectable_components(inf: &InflatedNetwork, members: &[usize]) -> Option<Vec<Vec<usize>>> {
    let n = members.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        p[i] = r;
        r
    }
    for a in 0..n {
        for b in a + 1..n {
            let ca = &inf.copies[members[a]].sources;
            let cb = &inf.copies[members[b]].sources;
            if ca.iter().any(|x| cb.contains(x)) {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                parent[ra] = rb;
            }
        }
    }
    let mut comps: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        comps.entry(r).or_default().push(members[i]);
    }
    let comps: Vec<Vec<usize>> = comps.into_values().collect();
    for comp in &comps {
        let mut parties = HashSet::new();
        let mut source_copy: HashMap<usize, usize> = HashMap::new();
        for &m in comp {
            let pc = &inf.copies[m];
            if !parties.insert(pc.party) {
                return None;
            }
            for &(s, c) in &pc.sources {
                if *source_copy.entry(s).or_insert(c) != c {
                    return None;
                }
            }
        }
    }
    Some(comps)
}

/// Maximal expressible sets with their component structure.
pub fn expressible_sets(inf: &InflatedNetwork) -> Vec<ExpressibleSet> {
    let n = inf.copies.len();
    assert!(n <= 24, "too many party-copies to enumerate subsets");
    let mut ok: Vec<Option<Vec<Vec<usize>>>> = Vec::with_capacity(1 << n);
    for mask in 0usize..(1 << n) {
        let members: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
        ok.push(if members.is_empty() { None } else { injectable_components(inf, &members) });
    }
    let mut out = Vec::new();
    for mask in 1usize..(1 << n) {
        let Some(comps) = &ok[mask] else { continue };
        let maximal = (0..n).all(|i| mask >> i & 1 == 1 || ok[mask | 1 << i].is_none());
        if maximal {
            out.push(ExpressibleSet {
                members: (0..n).filter(|&i| mask >> i & 1 == 1).collect(),
                components: comps.clone(),
            });
        }
    }
    out
}

/// Original parties of a component, in increasing order, with the matching copies.
fn component_parties(inf: &InflatedNetwork, comp: &[usize]) -> Vec<(usize, usize)> {
    let mut v: Vec<(usize, usize)> = comp.iter().map(|&c| (inf.copies[c].party, c)).collect();
    v.sort();
    v
}

/// Scalars the compatibility LP can be built over.
trait Pin: Clone + Zero + One + std::ops::Mul<Output = Self> {
    fn from_prob(p: f64) -> Self;
    fn from_count(c: usize) -> Self;
}

impl Pin for f64 {
    fn from_prob(p: f64) -> Self {
        p
    }
    fn from_count(c: usize) -> Self {
        c as f64
    }
}

impl Pin for BigRational {
    fn from_prob(p: f64) -> Self {
        rationalize(p)
    }
    fn from_count(c: usize) -> Self {
        BigRational::from_integer(c.into())
    }
}

/// Variable layout of the inflation LP.
#[derive(Debug, Clone)]
pub struct LpLayout {
    pub joint_outcomes: usize,
    /// Orbit id of every joint outcome.
    pub orbit_of: Vec<usize>,
    pub orbit_sizes: Vec<usize>,
}

fn layout(inf: &InflatedNetwork, symmetrize: bool) -> Result<LpLayout> {
    let radix: Vec<usize> = inf.copies.iter().map(|c| inf.network.parties[c.party].outputs).collect();
    let total = radix.iter().try_fold(1usize, |acc, &r| acc.checked_mul(r)).unwrap_or(usize::MAX);
    if total > MAX_JOINT_OUTCOMES {
        return Err(Error::InvalidArgument(format!(
            "inflation has {total} joint outcomes, more than the limit {MAX_JOINT_OUTCOMES}"
        )));
    }
    let mut orbit_of = vec![usize::MAX; total];
    let mut orbit_sizes = Vec::new();
    let group: &[Vec<usize>] = if symmetrize { &inf.symmetries } else { &inf.symmetries[..1] };
    let mut image = vec![0; radix.len()];
    for i in 0..total {
        if orbit_of[i] != usize::MAX {
            continue;
        }
        let id = orbit_sizes.len();
        let a = decode(i, &radix);
        let mut size = 0;
        for g in group {
            for (c, &gc) in g.iter().enumerate() {
                image[gc] = a[c];
            }
            let k = encode(&image, &radix);
            if orbit_of[k] == usize::MAX {
                orbit_of[k] = id;
                size += 1;
            }
        }
        orbit_sizes.push(size);
    }
    Ok(LpLayout { joint_outcomes: total, orbit_of, orbit_sizes })
}

fn build_lp_generic<T: Pin + lp::Field>(
    d: &Distribution,
    inf: &InflatedNetwork,
    sets: &[ExpressibleSet],
    lay: &LpLayout,
) -> Result<LpProblem<T>> {
    let radix: Vec<usize> = inf.copies.iter().map(|c| inf.network.parties[c.party].outputs).collect();
    let nv = lay.orbit_sizes.len();
    let mut p = LpProblem::<T>::new(nv);
    p.add_eq(lay.orbit_sizes.iter().map(|&s| T::from_count(s)).collect(), T::one());
    let mut seen: HashSet<Vec<(usize, usize)>> = HashSet::new();
    let mut marg_cache: HashMap<Vec<usize>, Vec<f64>> = HashMap::new();
    let zero_x = vec![0; d.num_parties()];
    for set in sets {
        let m_radix: Vec<usize> = set.members.iter().map(|&c| radix[c]).collect();
        let n_rows: usize = m_radix.iter().product();
        let mut counts: Vec<HashMap<usize, usize>> = vec![HashMap::new(); n_rows];
        for i in 0..lay.joint_outcomes {
            let a = decode(i, &radix);
            let sub: Vec<usize> = set.members.iter().map(|&c| a[c]).collect();
            *counts[encode(&sub, &m_radix)].entry(lay.orbit_of[i]).or_insert(0) += 1;
        }
        for (row_idx, row_counts) in counts.into_iter().enumerate() {
            let mut key: Vec<(usize, usize)> = row_counts.into_iter().collect();
            key.sort();
            let a_set = decode(row_idx, &m_radix);
            // pinned value: product over components of original marginals
            let mut value = T::one();
            for comp in &set.components {
                let cp = component_parties(inf, comp);
                let parties: Vec<usize> = cp.iter().map(|&(j, _)| j).collect();
                let marg = marg_cache
                    .entry(parties.clone())
                    .or_insert_with(|| marginal(d, &parties, &zero_x).expect("valid parties").probs);
                let outs: Vec<usize> = parties.iter().map(|&j| inf.network.parties[j].outputs).collect();
                let sub: Vec<usize> = cp
                    .iter()
                    .map(|&(_, c)| a_set[set.members.iter().position(|&m| m == c).expect("member")])
                    .collect();
                value = value * T::from_prob(marg[encode(&sub, &outs)]);
            }
            // rows with identical coefficients pin identical values by symmetry
            if seen.contains(&key) {
                continue;
            }
            seen.insert(key.clone());
            let mut row = vec![T::zero(); nv];
            for (o, c) in key {
                row[o] = T::from_count(c);
            }
            p.add_eq(row, value);
        }
    }
    Ok(p)
}

/// Outcome of an inflation compatibility test.
#[derive(Debug, Clone)]
pub struct CompatibilityReport {
    pub feasible: bool,
    pub verdict: String,
    pub party_copies: usize,
    pub expressible_sets: usize,
    pub n_vars: usize,
    pub n_constraints: usize,
    pub problem: LpProblem<f64>,
    pub result: LpResult<f64>,
    pub exact_problem: Option<LpProblem<BigRational>>,
    pub exact: Option<LpResult<BigRational>>,
}

#[derive(Debug, Clone, Copy)]
pub struct CompatibilityOptions {
    pub exact: bool,
    pub symmetrize: bool,
}

impl Default for CompatibilityOptions {
    fn default() -> Self {
        CompatibilityOptions { exact: false, symmetrize: true }
    }
}

/// Builds the inflation LP for `d` and solves it. With `exact`, the LP is
/// also solved over the rationals and the exact status decides the verdict.
pub fn test_compatibility(
    d: &Distribution,
    net: &Network,
    spec: &InflationSpec,
    opts: CompatibilityOptions,
) -> Result<CompatibilityReport> {
    if d.scenario != net.scenario() {
        return Err(Error::Scenario("distribution does not match the network scenario".into()));
    }
    if d.scenario.has_inputs() {
        return Err(Error::Scenario("inflation tests take no-input distributions".into()));
    }
    let inf = build_inflation(net, spec)?;
    let sets = expressible_sets(&inf);
    let lay = layout(&inf, opts.symmetrize)?;
    let problem: LpProblem<f64> = build_lp_generic(d, &inf, &sets, &lay)?;
    let result = lp::solve(&problem)?;
    let (exact_problem, exact) = if opts.exact {
        let ep: LpProblem<BigRational> = build_lp_generic(d, &inf, &sets, &lay)?;
        let er = lp::solve(&ep)?;
        (Some(ep), Some(er))
    } else {
        (None, None)
    };
    let feasible = match &exact {
        Some(r) => r.is_feasible(),
        None => result.is_feasible(),
    };
    let verdict = match (feasible, spec.fanout) {
        (true, _) => "feasible: no contradiction at this inflation level".to_string(),
        (false, true) => "infeasible: incompatible with network-local models".to_string(),
        (false, false) => {
            "infeasible: violates a theory-independent necessary condition".to_string()
        }
    };
    Ok(CompatibilityReport {
        feasible,
        verdict,
        party_copies: inf.copies.len(),
        expressible_sets: sets.len(),
        n_vars: problem.n_vars,
        n_constraints: problem.n_constraints(),
        problem,
        result,
        exact_problem,
        exact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn web_has_twelve_copies_and_eight_symmetries() {
        let net = Network::triangle(2);
        let inf = build_inflation(&net, &InflationSpec::preset("web", &net).unwrap()).unwrap();
        assert_eq!(inf.copies.len(), 12);
        assert_eq!(inf.symmetries.len(), 8);
    }

    #[test]
    fn cut_pins_expected_sets() {
        let net = Network::triangle(2);
        let inf = build_inflation(&net, &InflationSpec::preset("cut", &net).unwrap()).unwrap();
        assert_eq!(inf.copies.len(), 5);
        let sets = expressible_sets(&inf);
        // every maximal set has a component of original parties A and C
        // or B and C, or a disconnected A, B pair
        assert!(!sets.is_empty());
        for s in &sets {
            for c in &s.components {
                let mut ps: Vec<usize> = c.iter().map(|&k| inf.copies[k].party).collect();
                ps.sort();
                ps.dedup();
                assert_eq!(ps.len(), c.len());
            }
        }
    }

    #[test]
    fn ring_symmetry_is_the_global_swap() {
        let net = Network::triangle(2);
        let inf = build_inflation(&net, &InflationSpec::preset("ring:6", &net).unwrap()).unwrap();
        assert_eq!(inf.copies.len(), 6);
        assert_eq!(inf.symmetries.len(), 2);
        // no consecutive triple is expressible
        for s in expressible_sets(&inf) {
            assert!(s.components.iter().all(|c| c.len() <= 2));
        }
    }

    #[test]
    fn bad_wiring_is_rejected() {
        let net = Network::triangle(2);
        let mut spec = InflationSpec::preset("ring:6", &net).unwrap();
        spec.wiring[0].sources.remove("beta");
        assert!(build_inflation(&net, &spec).is_err());
    }
}
