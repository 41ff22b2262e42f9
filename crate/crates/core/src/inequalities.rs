//! Closed-form Bell-type inequality evaluators for standard and network scenarios.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{decode, Distribution, Network, Scenario};
use crate::quantum::{star_decomposition, star_observable};

/// Slack allowed when comparing a value with its bound.
pub const BOUND_TOL: f64 = 1e-9;
/// Auxiliary expectations of the TGB test must stay below this.
pub const TGB_AUX_TOL: f64 = 1e-6;

/// Inequality value oriented so that `value <= bound` is the compatible side.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityResult {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub satisfied: bool,
    pub auxiliary: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

impl InequalityResult {
    fn new(name: &str, value: f64, bound: f64) -> Self {
        InequalityResult {
            name: name.to_string(),
            value,
            bound,
            satisfied: value <= bound + BOUND_TOL,
            auxiliary: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    fn aux(mut self, key: &str, v: f64) -> Self {
        self.auxiliary.insert(key.to_string(), v);
        self
    }

    fn note(mut self, s: &str) -> Self {
        self.notes.push(s.to_string());
        self
    }
}

impl fmt::Display for InequalityResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.satisfied { "satisfied" } else { "violated" };
        writeln!(f, "{}: value {:.12} bound {:.12} -> {verdict}", self.name, self.value, self.bound)?;
        for (k, v) in &self.auxiliary {
            writeln!(f, "  {k} = {v:.12}")?;
        }
        for n in &self.notes {
            writeln!(f, "  note: {n}")?;
        }
        Ok(())
    }
}

fn require(d: &Distribution, shapes: &[(usize, usize)], what: &str) -> Result<()> {
    if d.scenario != Scenario::new(shapes.to_vec()) {
        return Err(Error::Scenario(format!(
            "{what} needs (inputs, outputs) per party {shapes:?}, got {:?}",
            d.scenario.parties.iter().map(|s| (s.inputs, s.outputs)).collect::<Vec<_>>()
        )));
    }
    Ok(())
}

/// `sum_a p(a|x) f(a)`.
fn expect(d: &Distribution, x: &[usize], f: impl Fn(&[usize]) -> f64) -> f64 {
    let outs = d.scenario.outputs();
    d.slice(x)
        .iter()
        .enumerate()
        .filter(|(_, p)| **p != 0.0)
        .map(|(i, p)| p * f(&decode(i, &outs)))
        .sum()
}

fn sign(bit: usize) -> f64 {
    if bit % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Product of `(-1)^{a_k}` over the listed parties.
fn parity(a: &[usize], parties: &[usize]) -> f64 {
    sign(parties.iter().map(|&k| a[k]).sum())
}

pub fn chsh(d: &Distribution) -> Result<InequalityResult> {
    require(d, &[(2, 2), (2, 2)], "CHSH")?;
    let e = |x: usize, y: usize| expect(d, &[x, y], |a| parity(a, &[0, 1]));
    let (e00, e01, e10, e11) = (e(0, 0), e(0, 1), e(1, 0), e(1, 1));
    Ok(InequalityResult::new("chsh", e00 + e01 + e10 - e11, 2.0)
        .aux("E00", e00)
        .aux("E01", e01)
        .aux("E10", e10)
        .aux("E11", e11))
}

/// Bits `(b0, b1)` of a four-valued outcome: `b = 2 b0 + b1`.
fn bits2(b: usize) -> (usize, usize) {
    (b >> 1, b & 1)
}

/// `I+` and `I-` of the bilocal scenario with A, C binary and B four-valued.
pub fn brgp_quantities(d: &Distribution) -> Result<(f64, f64)> {
    require(d, &[(2, 2), (1, 4), (2, 2)], "BRGP")?;
    let mut ip = 0.0;
    let mut im = 0.0;
    for x in 0..2 {
        for z in 0..2 {
            ip += expect(d, &[x, 0, z], |a| sign(a[0] + bits2(a[1]).0 + a[2]));
            im += expect(d, &[x, 0, z], |a| sign(a[0] + bits2(a[1]).1 + a[2] + x + z));
        }
    }
    Ok((ip / 4.0, im / 4.0))
}

pub fn brgp(d: &Distribution) -> Result<InequalityResult> {
    let (ip, im) = brgp_quantities(d)?;
    Ok(InequalityResult::new("brgp", ip.abs().sqrt() + im.abs().sqrt(), 1.0)
        .aux("I+", ip)
        .aux("I-", im))
}

/// Sign bits `(b1, b2, b3)` of the four TGB outcomes, as `+1`/`-1`.
pub const TGB_BITS: [[f64; 3]; 4] = [[-1.0, -1.0, 1.0], [-1.0, 1.0, -1.0], [1.0, -1.0, -1.0], [1.0, 1.0, 1.0]];

/// TGB evaluator. Besides the value, `auxiliary["max_aux"]` holds the largest
/// absolute expectation among those required to vanish; the bound applies
/// only when it is below [`TGB_AUX_TOL`].
pub fn tgb(d: &Distribution) -> Result<InequalityResult> {
    require(d, &[(3, 2), (1, 4), (3, 2)], "TGB")?;
    let bb = |b: usize, y: usize| TGB_BITS[b][y];
    let abc = |x: usize, y: usize, z: usize| expect(d, &[x, 0, z], |a| sign(a[0] + a[2]) * bb(a[1], y));
    let ab = |x: usize, y: usize| expect(d, &[x, 0, 0], |a| sign(a[0]) * bb(a[1], y));
    let bc = |y: usize, z: usize| expect(d, &[0, 0, z], |a| bb(a[1], y) * sign(a[2]));
    let ac = |x: usize, z: usize| expect(d, &[x, 0, z], |a| sign(a[0] + a[2]));
    let ea = |x: usize| expect(d, &[x, 0, 0], |a| sign(a[0]));
    let eb = |y: usize| expect(d, &[0, 0, 0], |a| bb(a[1], y));
    let ec = |z: usize| expect(d, &[0, 0, z], |a| sign(a[2]));
    let mut two_bc = 0.0;
    let mut two_ab = 0.0;
    let mut three = 0.0;
    let mut max_aux: f64 = 0.0;
    let mut track = |v: f64| max_aux = max_aux.max(v.abs());
    for k in 0..3 {
        track(ea(k));
        track(eb(k));
        track(ec(k));
    }
    for x in 0..3 {
        for y in 0..3 {
            if x == y {
                two_ab += ab(x, y);
                two_bc += bc(x, y);
            } else {
                track(ab(x, y));
                track(bc(x, y));
            }
            track(ac(x, y));
            for z in 0..3 {
                if x != y && y != z && x != z {
                    three += abc(x, y, z);
                } else {
                    track(abc(x, y, z));
                }
            }
        }
    }
    let value = (two_bc - two_ab) / 3.0 - three;
    let mut r = InequalityResult::new("tgb", value, 3.0)
        .aux("sum_BC", two_bc)
        .aux("sum_AB", two_ab)
        .aux("sum_ABC", three)
        .aux("max_aux", max_aux)
        .note("local bound 3 is established numerically for general bilocal models, not analytically");
    if max_aux >= TGB_AUX_TOL {
        r = r.note("auxiliary expectations do not vanish; the bound does not apply");
    }
    Ok(r)
}

/// Correlation combination `I_S` of the star inequality for an even subset
/// `S` of branches (0-based). Branch `k` is party `0` for `k = 0` and party
/// `k + 1` otherwise; the center is party 1.
pub fn star_quantity(d: &Distribution, m: usize, subset: &[usize]) -> Result<f64> {
    let target = star_observable(m, subset);
    let (sgn, bits) = star_decomposition(m, &target)
        .ok_or_else(|| Error::InvalidArgument(format!("subset {subset:?} has odd size")))?;
    let branch: Vec<usize> = (0..m).map(|k| if k == 0 { 0 } else { k + 1 }).collect();
    let mut total = 0.0;
    for xs in 0..(1usize << m) {
        let xk: Vec<usize> = (0..m).map(|k| (xs >> (m - 1 - k)) & 1).collect();
        let mut x = vec![0; m + 1];
        for k in 0..m {
            x[branch[k]] = xk[k];
        }
        let coef = sign(subset.iter().map(|&k| xk[k]).sum());
        total += coef
            * expect(d, &x, |a| {
                let b = a[1];
                let center: usize = bits.iter().map(|&t| (b >> (m - 1 - t)) & 1).sum();
                sgn * parity(a, &branch) * sign(center)
            });
    }
    Ok(total / (1u64 << m) as f64)
}

/// Even subsets of `0..m`, in increasing bitmask order.
pub fn even_subsets(m: usize) -> Vec<Vec<usize>> {
    (0..(1usize << m))
        .filter(|s| s.count_ones() % 2 == 0)
        .map(|s| (0..m).filter(|&k| (s >> (m - 1 - k)) & 1 == 1).collect())
        .collect()
}

pub fn star(d: &Distribution, m: usize) -> Result<InequalityResult> {
    if m < 2 {
        return Err(Error::InvalidArgument("star inequality needs m >= 2".into()));
    }
    let mut shapes = vec![(2, 2), (1, 1usize << m)];
    shapes.extend(std::iter::repeat((2, 2)).take(m - 1));
    require(d, &shapes, "star inequality")?;
    let mut value = 0.0;
    let mut r = InequalityResult::new("star", 0.0, (1u64 << m) as f64 / 4.0);
    for s in even_subsets(m) {
        let q = star_quantity(d, m, &s)?;
        value += q.abs().powf(1.0 / m as f64);
        let label: String = s.iter().map(|k| (k + 1).to_string()).collect::<Vec<_>>().join(",");
        r.auxiliary.insert(format!("I[{label}]"), q);
    }
    r.value = value;
    r.satisfied = value <= r.bound + BOUND_TOL;
    Ok(r)
}

/// Model class selecting the bound of the Mermin and Svetlichny tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelClass {
    Local,
    QuantumBell,
    NoSignaling,
}

impl std::str::FromStr for ModelClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l" | "local" => Ok(ModelClass::Local),
            "q" | "quantum" | "qbell" => Ok(ModelClass::QuantumBell),
            "ns" | "nosignaling" | "no-signaling" => Ok(ModelClass::NoSignaling),
            other => Err(Error::Parse(format!("unknown model class '{other}'"))),
        }
    }
}

fn three_body(d: &Distribution, x: usize, y: usize, z: usize) -> f64 {
    expect(d, &[x, y, z], |a| parity(a, &[0, 1, 2]))
}

pub fn mermin(d: &Distribution, class: ModelClass) -> Result<InequalityResult> {
    require(d, &[(2, 2); 3], "Mermin")?;
    let e = |x, y, z| three_body(d, x, y, z);
    let value = e(1, 0, 0) + e(0, 1, 0) + e(0, 0, 1) - e(1, 1, 1);
    let bound = match class {
        ModelClass::Local => 2.0,
        ModelClass::QuantumBell | ModelClass::NoSignaling => 4.0,
    };
    Ok(InequalityResult::new("mermin", value, bound))
}

pub fn svetlichny(d: &Distribution, class: ModelClass) -> Result<InequalityResult> {
    require(d, &[(2, 2); 3], "Svetlichny")?;
    let e = |x, y, z| three_body(d, x, y, z);
    let value = e(1, 0, 0) + e(0, 1, 0) + e(0, 0, 1) - e(1, 1, 1) - e(0, 1, 1) - e(1, 0, 1) - e(1, 1, 0)
        + e(0, 0, 0);
    let bound = match class {
        ModelClass::Local => 4.0,
        ModelClass::QuantumBell => 4.0 * std::f64::consts::SQRT_2,
        ModelClass::NoSignaling => 8.0,
    };
    Ok(InequalityResult::new("svetlichny", value, bound))
}

/// One weight per party; per source, the weights of its parties sum to at most one.
#[derive(Debug, Clone, PartialEq)]
pub struct FinnerWeights(Vec<f64>);

impl FinnerWeights {
    pub fn new(net: &Network, eta: Vec<f64>) -> Result<Self> {
        if eta.len() != net.num_parties() {
            return Err(Error::Dimension("one Finner weight per party".into()));
        }
        if eta.iter().any(|&w| !(w > 0.0 && w <= 1.0)) {
            return Err(Error::InvalidArgument("Finner weights must lie in (0, 1]".into()));
        }
        for s in 0..net.sources.len() {
            let sum: f64 = net.source_parties(s).iter().map(|&j| eta[j]).sum();
            if sum > 1.0 + 1e-12 {
                return Err(Error::InvalidArgument(format!(
                    "weights on source '{}' sum to {sum} > 1",
                    net.sources[s].id
                )));
            }
        }
        Ok(FinnerWeights(eta))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Finner inequality with indicator post-processings: reports the largest
/// ratio `p(a) / prod_j p_j(a_j)^{eta_j}`; the inequality holds iff it is at most one.
pub fn finner(d: &Distribution, w: &FinnerWeights) -> Result<InequalityResult> {
    if d.scenario.has_inputs() {
        return Err(Error::Scenario("Finner test needs a no-input distribution".into()));
    }
    let eta = w.as_slice();
    if eta.len() != d.num_parties() {
        return Err(Error::Dimension("one Finner weight per party".into()));
    }
    let outs = d.scenario.outputs();
    let n = outs.len();
    let mut marg: Vec<Vec<f64>> = outs.iter().map(|&o| vec![0.0; o]).collect();
    for (i, &p) in d.probs.iter().enumerate() {
        let a = decode(i, &outs);
        for j in 0..n {
            marg[j][a[j]] += p;
        }
    }
    let mut best = 0.0f64;
    let mut arg = 0;
    for (i, &p) in d.probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        let a = decode(i, &outs);
        let rhs: f64 = (0..n).map(|j| marg[j][a[j]].powf(eta[j])).product();
        let ratio = p / rhs;
        if ratio > best {
            best = ratio;
            arg = i;
        }
    }
    let mut r = InequalityResult::new("finner", best, 1.0);
    if !d.probs.is_empty() {
        let a = decode(arg, &outs);
        let rhs: f64 = (0..n).map(|j| marg[j][a[j]].powf(eta[j])).product();
        r = r.aux("worst_outcome_index", arg as f64).aux("p_joint", d.probs[arg]).aux("bound_expression", rhs);
    }
    Ok(r)
}

/// `p(a,b,c) <= sqrt(p(a) p(b) p(c))` on the triangle.
pub fn finner_triangle(d: &Distribution) -> Result<InequalityResult> {
    if d.num_parties() != 3 {
        return Err(Error::Scenario("triangle Finner test needs three parties".into()));
    }
    let net = Network::triangle(2);
    let w = FinnerWeights::new(&net, vec![0.5; 3])?;
    let mut r = finner(d, &w)?;
    r.name = "finner-triangle".into();
    Ok(r)
}

/// Correlator inequality on one- and two-body terms of a binary triangle;
/// value is LHS - RHS, compatible iff nonpositive.
pub fn ns_triangle(d: &Distribution) -> Result<InequalityResult> {
    require(d, &[(1, 2); 3], "triangle correlator test")?;
    let x = [0, 0, 0];
    let e = |parties: &[usize]| expect(d, &x, |a| parity(a, parties));
    let (ea, eb, ec) = (e(&[0]).abs(), e(&[1]).abs(), e(&[2]).abs());
    let (eab, eac, ebc) = (e(&[0, 1]), e(&[0, 2]), e(&[1, 2]));
    let lhs = (1.0 + ea + eb + eab).powi(2) + (1.0 + ea + ec + eac).powi(2) + (1.0 + eb + ec + ebc).powi(2);
    let rhs = 6.0 * (1.0 + ea) * (1.0 + eb) * (1.0 + ec);
    Ok(InequalityResult::new("ns-triangle", lhs - rhs, 0.0)
        .aux("lhs", lhs)
        .aux("rhs", rhs)
        .aux("E_A", e(&[0]))
        .aux("E_B", e(&[1]))
        .aux("E_C", e(&[2]))
        .aux("E_AB", eab)
        .aux("E_AC", eac)
        .aux("E_BC", ebc))
}

/// Every deterministic strategy of a scenario as a distribution, in
/// row-major order over per-party response functions.
pub fn deterministic_strategies(scenario: &Scenario) -> impl Iterator<Item = Distribution> + '_ {
    let funcs: Vec<usize> = scenario.parties.iter().map(|p| p.outputs.pow(p.inputs as u32)).collect();
    let total: usize = funcs.iter().product();
    let ins = scenario.inputs();
    let outs = scenario.outputs();
    (0..total).map(move |idx| {
        let choice = decode(idx, &funcs);
        let resp: Vec<Vec<usize>> = (0..outs.len())
            .map(|j| decode(choice[j], &vec![outs[j]; ins[j]]))
            .collect();
        Distribution::from_fn(scenario.clone(), |x, a| {
            if (0..outs.len()).all(|j| resp[j][x[j]] == a[j]) {
                1.0
            } else {
                0.0
            }
        })
        .expect("deterministic strategy is normalized")
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo;

    #[test]
    fn chsh_of_pr_box_is_four() {
        assert_eq!(chsh(&zoo::pr_box()).unwrap().value, 4.0);
    }

    #[test]
    fn chsh_deterministic_bound() {
        let sc = Scenario::new(vec![(2, 2), (2, 2)]);
        let best = deterministic_strategies(&sc).map(|d| chsh(&d).unwrap().value).fold(f64::MIN, f64::max);
        assert_eq!(best, 2.0);
        assert_eq!(deterministic_strategies(&sc).count(), 16);
    }

    #[test]
    fn brgp_all_zeros() {
        let d = Distribution::deterministic(Scenario::new(vec![(2, 2), (1, 4), (2, 2)]), &[0, 0, 0]);
        let r = brgp(&d).unwrap();
        assert_eq!(r.auxiliary["I+"], 1.0);
        assert_eq!(r.auxiliary["I-"], 0.0);
        assert_eq!(r.value, 1.0);
    }

    #[test]
    fn mermin_svetlichny_local_bounds() {
        let sc = Scenario::new(vec![(2, 2); 3]);
        let mut m: f64 = f64::MIN;
        let mut s: f64 = f64::MIN;
        for d in deterministic_strategies(&sc) {
            m = m.max(mermin(&d, ModelClass::Local).unwrap().value);
            s = s.max(svetlichny(&d, ModelClass::Local).unwrap().value);
        }
        assert_eq!(m, 2.0);
        assert_eq!(s, 4.0);
    }

    #[test]
    fn finner_examples() {
        let g = finner_triangle(&zoo::ghz()).unwrap();
        assert!((g.value - 0.5 / (0.125f64).sqrt()).abs() < 1e-12);
        assert!(!g.satisfied);
        let w = finner_triangle(&zoo::w()).unwrap();
        assert!((w.value - (1.0 / 3.0) / (4.0f64 / 27.0).sqrt()).abs() < 1e-12);
        assert!(w.satisfied);
    }

    #[test]
    fn finner_weights_respect_sources() {
        let net = Network::triangle(2);
        assert!(FinnerWeights::new(&net, vec![0.6, 0.6, 0.4]).is_err());
        assert!(FinnerWeights::new(&net, vec![0.5, 0.5, 0.5]).is_ok());
    }

    #[test]
    fn ns_triangle_examples() {
        let g = ns_triangle(&zoo::ghz()).unwrap();
        assert_eq!(g.auxiliary["lhs"], 12.0);
        assert_eq!(g.auxiliary["rhs"], 6.0);
        assert_eq!(g.value, 6.0);
        let u = ns_triangle(&zoo::uniform(&[2, 2, 2])).unwrap();
        assert_eq!(u.value, -3.0);
    }

    #[test]
    fn tgb_uniform_is_zero() {
        let d = Distribution::uniform(Scenario::new(vec![(3, 2), (1, 4), (3, 2)]));
        let r = tgb(&d).unwrap();
        assert!(r.value.abs() < 1e-15);
        assert!(r.auxiliary["max_aux"] < 1e-15);
    }

    #[test]
    fn even_subset_count() {
        assert_eq!(even_subsets(3).len(), 4);
        assert_eq!(even_subsets(4).len(), 8);
    }
}
