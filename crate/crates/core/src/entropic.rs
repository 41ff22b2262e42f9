//! Shannon entropies of observed variables and entropic compatibility tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::inequalities::InequalityResult;
use crate::lp::{self, LpProblem, LpResult};
use crate::model::{decode, encode, marginal, Distribution, Network, Scenario};

/// Entropies in bits of every nonempty subset of `vars`, indexed by bitmask
/// (bit `k` set means `vars[k]` is in the subset). Entry 0 is the empty set.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyVector {
    pub vars: Vec<String>,
    pub h: Vec<f64>,
}

impl EntropyVector {
    pub fn get(&self, mask: usize) -> f64 {
        self.h[mask]
    }

    fn mask_of(&self, names: &[&str]) -> Result<usize> {
        names.iter().try_fold(0usize, |m, n| {
            let k = self
                .vars
                .iter()
                .position(|v| v == n)
                .ok_or_else(|| Error::InvalidArgument(format!("no variable '{n}' in entropy vector")))?;
            Ok(m | 1 << k)
        })
    }

    /// Entropy of the named variables.
    pub fn entropy(&self, names: &[&str]) -> Result<f64> {
        Ok(self.h[self.mask_of(names)?])
    }
}

/// Shannon entropy in bits.
pub fn shannon(p: &[f64]) -> f64 {
    p.iter().filter(|&&v| v > 0.0).map(|&v| -v * v.log2()).sum()
}

/// Entropy vector of the parties' outputs at the input assignment `x`.
/// Variables are named by `names`, or `P0, P1, ..` when absent.
pub fn entropy_vector(d: &Distribution, x: &[usize], names: Option<&[String]>) -> Result<EntropyVector> {
    let n = d.num_parties();
    if x.len() != n {
        return Err(Error::InvalidArgument("input assignment must cover every party".into()));
    }
    let vars: Vec<String> = match names {
        Some(v) if v.len() == n => v.to_vec(),
        Some(_) => return Err(Error::Dimension("one name per party".into())),
        None => (0..n).map(|k| format!("P{k}")).collect(),
    };
    let mut h = vec![0.0; 1 << n];
    for mask in 1usize..(1 << n) {
        let keep: Vec<usize> = (0..n).filter(|&k| mask >> k & 1 == 1).collect();
        h[mask] = shannon(&marginal(d, &keep, x)?.probs);
    }
    Ok(EntropyVector { vars, h })
}

/// A linear form `sum coef * H(mask) >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShannonForm {
    pub label: String,
    pub terms: Vec<(usize, f64)>,
}

impl ShannonForm {
    pub fn eval(&self, h: &[f64]) -> f64 {
        self.terms.iter().map(|&(m, c)| c * h[m]).sum()
    }
}

fn cmi_terms(i: usize, j: usize, k: usize) -> Vec<(usize, f64)> {
    // I(i:j|K) = H(iK) + H(jK) - H(ijK) - H(K)
    let mut t = vec![(i | k, 1.0), (j | k, 1.0), (i | j | k, -1.0)];
    if k != 0 {
        t.push((k, -1.0));
    }
    t
}

/// Elemental Shannon inequalities on `n` variables: `n` conditional
/// monotonicity forms `H(N) - H(N - i) >= 0` and the submodularity forms
/// `I(i:j|K) >= 0`.
pub fn elemental_constraints(n: usize) -> Vec<ShannonForm> {
    assert!(n >= 1, "need at least one variable");
    let full = (1usize << n) - 1;
    let mut out = Vec::new();
    for i in 0..n {
        let rest = full & !(1 << i);
        let mut terms = vec![(full, 1.0)];
        if rest != 0 {
            terms.push((rest, -1.0));
        }
        out.push(ShannonForm { label: format!("H({i} | rest) >= 0"), terms });
    }
    for i in 0..n {
        for j in i + 1..n {
            let others = full & !(1 << i) & !(1 << j);
            // every subset K of the others
            let mut k = others;
            loop {
                out.push(ShannonForm {
                    label: format!("I({i}:{j} | {k:#b}) >= 0"),
                    terms: cmi_terms(1 << i, 1 << j, k),
                });
                if k == 0 {
                    break;
                }
                k = (k - 1) & others;
            }
        }
    }
    out
}

/// Largest violation of the elemental inequalities by `h`.
pub fn elemental_violation(h: &[f64], n: usize) -> f64 {
    elemental_constraints(n)
        .iter()
        .map(|f| (-f.eval(h)).max(0.0))
        .fold(0.0, f64::max)
}

/// Compatibility LP of an observed entropy vector with a network.
///
/// Variables are the entropies of all subsets of parties plus sources,
/// constrained by the elemental inequalities, full independence of the
/// sources, each party being a function of its sources, and
/// `I(A_j : A_k | common sources) = 0` for every pair. Observed subsets are
/// pinned to `ev`. Infeasibility means no network-local model produces
/// these entropies.
pub fn network_entropy_lp(ev: &EntropyVector, net: &Network) -> Result<LpProblem<f64>> {
    let np = net.num_parties();
    let ns = net.sources.len();
    let n = np + ns;
    if n > 10 {
        return Err(Error::InvalidArgument(format!("{n} variables is beyond desk scale")));
    }
    // observed variable k -> party index
    let mut map = Vec::with_capacity(ev.vars.len());
    for v in &ev.vars {
        map.push(
            net.party_index(v)
                .ok_or_else(|| Error::InvalidArgument(format!("entropy variable '{v}' is not a party")))?,
        );
    }
    let nv = (1usize << n) - 1;
    let col = |mask: usize| mask - 1;
    let src_bit = |s: usize| 1usize << (np + s);
    let mut p = LpProblem::<f64>::new(nv);
    let row = |terms: &[(usize, f64)]| {
        let mut r = vec![0.0; nv];
        for &(m, c) in terms {
            if m != 0 {
                r[col(m)] += c;
            }
        }
        r
    };
    for f in elemental_constraints(n) {
        let r = row(&f.terms);
        p.add_ge(r, 0.0);
    }
    // H(all sources) = sum H(source)
    if ns > 1 {
        let all: usize = (0..ns).map(src_bit).sum();
        let mut t = vec![(all, 1.0)];
        t.extend((0..ns).map(|s| (src_bit(s), -1.0)));
        p.add_eq(row(&t), 0.0);
    }
    for j in 0..np {
        let srcs: usize = net.party_sources(j).into_iter().map(src_bit).sum();
        p.add_eq(row(&[(1 << j | srcs, 1.0), (srcs, -1.0)]), 0.0);
        for k in j + 1..np {
            let common: usize = net.common_sources(j, k).into_iter().map(src_bit).sum();
            p.add_eq(row(&cmi_terms(1 << j, 1 << k, common)), 0.0);
        }
    }
    for mask in 1usize..(1 << ev.vars.len()) {
        let pm: usize = (0..ev.vars.len()).filter(|&k| mask >> k & 1 == 1).map(|k| 1 << map[k]).sum();
        p.add_eq(row(&[(pm, 1.0)]), ev.h[mask]);
    }
    Ok(p)
}

pub fn network_entropy_feasible(ev: &EntropyVector, net: &Network) -> Result<LpResult<f64>> {
    lp::solve(&network_entropy_lp(ev, net)?)
}

/// `I(A:B) + I(A:C) - H(A)` maximized over the choice of the central party.
pub fn check_triangle_entropy(d: &Distribution) -> Result<InequalityResult> {
    if d.num_parties() != 3 || d.scenario.has_inputs() {
        return Err(Error::Scenario("triangle entropy test needs three parties without inputs".into()));
    }
    let ev = entropy_vector(d, &[0, 0, 0], None)?;
    let h = |m: usize| ev.h[m];
    let mi = |a: usize, b: usize| h(a) + h(b) - h(a | b);
    let names = ["A", "B", "C"];
    let mut best = f64::NEG_INFINITY;
    let mut role = 0;
    for a in 0..3 {
        let (b, c) = ((a + 1) % 3, (a + 2) % 3);
        let v = mi(1 << a, 1 << b) + mi(1 << a, 1 << c) - h(1 << a);
        if v > best {
            best = v;
            role = a;
        }
    }
    let mut r = InequalityResult {
        name: "triangle-entropy".into(),
        value: best,
        bound: 0.0,
        satisfied: best <= crate::inequalities::BOUND_TOL,
        auxiliary: Default::default(),
        notes: vec![format!("worst central party {}", names[role])],
    };
    r.auxiliary.insert("H(A)".into(), h(1));
    r.auxiliary.insert("I(A:B)".into(), mi(1, 2));
    r.auxiliary.insert("I(A:C)".into(), mi(1, 4));
    Ok(r)
}

/// `H(A0,C) - H(A0,B) - H(C|A1,B)` on the bilocal scenario where only A has
/// an input (two settings).
pub fn check_bilocal_entropy(d: &Distribution) -> Result<InequalityResult> {
    let sh = &d.scenario.parties;
    if sh.len() != 3 || sh[0].inputs != 2 || sh[1].inputs != 1 || sh[2].inputs != 1 {
        return Err(Error::Scenario("bilocal entropy test needs A with two inputs and B, C without".into()));
    }
    let h = |x: usize, keep: &[usize]| -> Result<f64> { Ok(shannon(&marginal(d, keep, &[x, 0, 0])?.probs)) };
    let h_a0c = h(0, &[0, 2])?;
    let h_a0b = h(0, &[0, 1])?;
    let h_c_given_a1b = h(1, &[0, 1, 2])? - h(1, &[0, 1])?;
    let value = h_a0c - h_a0b - h_c_given_a1b;
    let mut r = InequalityResult {
        name: "bilocal-entropy".into(),
        value,
        bound: 0.0,
        satisfied: value <= crate::inequalities::BOUND_TOL,
        auxiliary: Default::default(),
        notes: Vec::new(),
    };
    r.auxiliary.insert("H(A0,C)".into(), h_a0c);
    r.auxiliary.insert("H(A0,B)".into(), h_a0b);
    r.auxiliary.insert("H(C|A1,B)".into(), h_c_given_a1b);
    Ok(r)
}

/// Distribution `p(b,c) p(a|x,b,c)` on the bilocal scenario with binary
/// outputs and two settings for A.
pub fn bilocal_from_parts(pbc: &[f64], pa: &[f64]) -> Result<Distribution> {
    let sc = Scenario::new(vec![(2, 2), (1, 2), (1, 2)]);
    Distribution::from_fn(sc, |x, a| {
        let bc = encode(&[a[1], a[2]], &[2, 2]);
        pbc[bc] * pa[((x[0] * 4) + bc) * 2 + a[0]]
    })
}

/// Random search with local refinement for a violation of the bilocal
/// entropic inequality. Candidates are `p(b,c) p(a|x,b,c)`, which covers
/// every no-signaling distribution of this scenario. Returns the best
/// distribution found and its value.
pub fn bilocal_entropy_scan(samples: usize, refine: usize, seed: u64) -> Result<(Distribution, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(Vec<f64>, Vec<f64>, f64)> = None;
    let value = |pbc: &[f64], pa: &[f64]| -> Result<f64> {
        Ok(check_bilocal_entropy(&bilocal_from_parts(pbc, pa)?)?.value)
    };
    let simplex = |rng: &mut ChaCha8Rng, n: usize, sharp: f64| -> Vec<f64> {
        let raw: Vec<f64> = (0..n).map(|_| rng.gen::<f64>().powf(sharp)).collect();
        let s: f64 = raw.iter().sum();
        raw.iter().map(|v| v / s).collect()
    };
    for _ in 0..samples.max(1) {
        let sharp = rng.gen_range(1.0..8.0);
        let pbc = simplex(&mut rng, 4, sharp);
        let pa: Vec<f64> = (0..8).flat_map(|_| simplex(&mut rng, 2, sharp)).collect();
        let v = value(&pbc, &pa)?;
        if best.as_ref().map_or(true, |b| v > b.2) {
            best = Some((pbc, pa, v));
        }
    }
    let (mut pbc, mut pa, mut v) = best.expect("at least one sample");
    let mut scale = 0.3;
    for _ in 0..refine {
        let mut nbc: Vec<f64> = pbc.iter().map(|&p| (p + scale * rng.gen_range(-0.5..0.5)).max(0.0)).collect();
        let s: f64 = nbc.iter().sum();
        if s <= 0.0 {
            continue;
        }
        nbc.iter_mut().for_each(|p| *p /= s);
        let mut na = pa.clone();
        for pair in na.chunks_mut(2) {
            let t = (pair[0] + scale * rng.gen_range(-0.5..0.5)).clamp(0.0, 1.0);
            pair[0] = t;
            pair[1] = 1.0 - t;
        }
        let nv = value(&nbc, &na)?;
        if nv > v {
            pbc = nbc;
            pa = na;
            v = nv;
        } else {
            scale = (scale * 0.995).max(1e-3);
        }
    }
    Ok((bilocal_from_parts(&pbc, &pa)?, v))
}

/// Entropies of an arbitrary joint table, used by property tests.
pub fn entropy_vector_of_joint(outputs: &[usize], probs: &[f64]) -> Result<EntropyVector> {
    let d = Distribution::new(Scenario::no_input(outputs), probs.to_vec())?;
    entropy_vector(&d, &vec![0; outputs.len()], None)
}

/// Decodes a subset mask into variable indices.
pub fn mask_members(mask: usize, n: usize) -> Vec<usize> {
    decode(mask, &vec![2; n]).into_iter().rev().enumerate().filter(|(_, b)| *b == 1).map(|(k, _)| k).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo;

    #[test]
    fn elemental_counts() {
        assert_eq!(elemental_constraints(2).len(), 3);
        assert_eq!(elemental_constraints(3).len(), 9);
        assert_eq!(elemental_constraints(4).len(), 4 + 6 * 4);
    }

    #[test]
    fn ghz_entropies() {
        let ev = entropy_vector(&zoo::ghz(), &[0, 0, 0], None).unwrap();
        assert!((ev.get(1) - 1.0).abs() < 1e-12);
        assert!((ev.get(3) - 1.0).abs() < 1e-12);
        assert!((ev.get(7) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn w_marginal_entropy() {
        let ev = entropy_vector(&zoo::w(), &[0, 0, 0], None).unwrap();
        let h = -(1.0f64 / 3.0) * (1.0f64 / 3.0).log2() - (2.0f64 / 3.0) * (2.0f64 / 3.0).log2();
        assert!((ev.get(1) - h).abs() < 1e-12);
        assert!((h - 0.9183).abs() < 1e-4);
    }

    #[test]
    fn triangle_entropy_values() {
        assert!((check_triangle_entropy(&zoo::ghz()).unwrap().value - 1.0).abs() < 1e-12);
        let w = check_triangle_entropy(&zoo::w()).unwrap();
        assert!(w.satisfied);
        assert!((w.value - (0.5032 - 0.9183)).abs() < 1e-3);
    }

    #[test]
    fn bilocal_entropy_examples() {
        let prod = bilocal_from_parts(&[0.25; 4], &[0.5; 16]).unwrap();
        assert!((check_bilocal_entropy(&prod).unwrap().value + 1.0).abs() < 1e-12);
        let det = Distribution::deterministic(Scenario::new(vec![(2, 2), (1, 2), (1, 2)]), &[0, 0, 0]);
        assert_eq!(check_bilocal_entropy(&det).unwrap().value, 0.0);
    }

    #[test]
    fn mask_members_lists_set_bits() {
        assert_eq!(mask_members(0b101, 3), vec![0, 2]);
    }
}
