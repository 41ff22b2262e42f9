//! Explicit network-local models: evaluation, alternating-LP fitting, and the
//! correlator-space search for binary-output bilocal models.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky_solve, RMatrix};
use crate::lp::{self, LpProblem, LpStatus};
use crate::model::{decode, encode, tuples, Distribution, Network, Scenario};

/// Finite local variables per source with per-party response tables.
///
/// `responses[j]` is indexed by `(lambda_idx * s_j + x) * o_j + a`, where
/// `lambda_idx` encodes the symbols of the party's sources in declaration
/// order, first source most significant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalModel {
    pub cards: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
    pub responses: Vec<Vec<f64>>,
}

fn lambda_radix(net: &Network, cards: &[usize], j: usize) -> Vec<usize> {
    net.party_sources(j).iter().map(|&s| cards[s]).collect()
}

impl LocalModel {
    pub fn new(net: &Network, cards: Vec<usize>, weights: Vec<Vec<f64>>, responses: Vec<Vec<f64>>) -> Result<Self> {
        let m = LocalModel { cards, weights, responses };
        m.check(net)?;
        Ok(m)
    }

    /// Model whose parties answer deterministically via `f(party, input, symbols)`.
    pub fn deterministic(
        net: &Network,
        cards: Vec<usize>,
        weights: Vec<Vec<f64>>,
        f: impl Fn(usize, usize, &[usize]) -> usize,
    ) -> Result<Self> {
        let mut responses = Vec::with_capacity(net.num_parties());
        for (j, party) in net.parties.iter().enumerate() {
            let radix = lambda_radix(net, &cards, j);
            let (s, o) = (party.inputs, party.outputs);
            let n_lam: usize = radix.iter().product();
            let mut table = vec![0.0; n_lam * s * o];
            for (li, lam) in tuples(&radix).enumerate() {
                for x in 0..s {
                    let a = f(j, x, &lam);
                    if a >= o {
                        return Err(Error::InvalidArgument(format!(
                            "response {a} of party {} exceeds its {o} outputs",
                            party.id
                        )));
                    }
                    table[(li * s + x) * o + a] = 1.0;
                }
            }
            responses.push(table);
        }
        LocalModel::new(net, cards, weights, responses)
    }

    /// Random model: Dirichlet-like weights and either deterministic or
    /// uniformly random stochastic responses.
    pub fn random<R: Rng>(net: &Network, cards: &[usize], deterministic: bool, rng: &mut R) -> Self {
        let weights = cards.iter().map(|&c| random_simplex(c, rng)).collect();
        let responses = (0..net.num_parties())
            .map(|j| {
                let (s, o) = (net.parties[j].inputs, net.parties[j].outputs);
                let n_lam: usize = lambda_radix(net, cards, j).iter().product();
                let mut t = Vec::with_capacity(n_lam * s * o);
                for _ in 0..n_lam * s {
                    if deterministic {
                        let a = rng.gen_range(0..o);
                        t.extend((0..o).map(|b| if a == b { 1.0 } else { 0.0 }));
                    } else {
                        t.extend(random_simplex(o, rng));
                    }
                }
                t
            })
            .collect();
        LocalModel { cards: cards.to_vec(), weights, responses }
    }

    fn check(&self, net: &Network) -> Result<()> {
        if self.cards.len() != net.sources.len() || self.weights.len() != net.sources.len() {
            return Err(Error::Dimension("one cardinality and weight vector per source".into()));
        }
        for (i, (c, w)) in self.cards.iter().zip(&self.weights).enumerate() {
            if *c == 0 || w.len() != *c {
                return Err(Error::Dimension(format!("source {i} has {} weights for cardinality {c}", w.len())));
            }
            let sum: f64 = w.iter().sum();
            if w.iter().any(|&v| v < 0.0) || (sum - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidArgument(format!("weights of source {i} are not a distribution")));
            }
        }
        if self.responses.len() != net.num_parties() {
            return Err(Error::Dimension("one response table per party".into()));
        }
        for (j, party) in net.parties.iter().enumerate() {
            let n_lam: usize = lambda_radix(net, &self.cards, j).iter().product();
            let (s, o) = (party.inputs, party.outputs);
            let t = &self.responses[j];
            if t.len() != n_lam * s * o {
                return Err(Error::Dimension(format!("response table of {} has wrong size", party.id)));
            }
            for row in t.chunks(o) {
                let sum: f64 = row.iter().sum();
                if row.iter().any(|&v| v < -1e-12) || (sum - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidArgument(format!(
                        "response table of {} is not a conditional distribution",
                        party.id
                    )));
                }
            }
        }
        Ok(())
    }

    /// Exact finite-sum evaluation of the network-local distribution.
    pub fn evaluate(&self, net: &Network) -> Result<Distribution> {
        self.check(net)?;
        let scen = net.scenario();
        let probs = self.tensor(net, &scen, None);
        Distribution::from_computed(scen, probs)
    }

    /// Distribution tensor, optionally with one party's response table
    /// replaced by `override_`.
    fn tensor(&self, net: &Network, scen: &Scenario, override_: Option<(usize, &[f64])>) -> Vec<f64> {
        let n = net.num_parties();
        let ins = scen.inputs();
        let outs = scen.outputs();
        let n_out = scen.num_outputs();
        let mut probs = vec![0.0; scen.size()];
        let psrc: Vec<Vec<usize>> = (0..n).map(|j| net.party_sources(j)).collect();
        let radices: Vec<Vec<usize>> = (0..n).map(|j| lambda_radix(net, &self.cards, j)).collect();
        let table = |j: usize| -> &[f64] {
            match override_ {
                Some((k, t)) if k == j => t,
                _ => &self.responses[j],
            }
        };
        for lam in tuples(&self.cards) {
            let w: f64 = lam.iter().enumerate().map(|(i, &l)| self.weights[i][l]).product();
            if w == 0.0 {
                continue;
            }
            let lidx: Vec<usize> = (0..n)
                .map(|j| {
                    let sub: Vec<usize> = psrc[j].iter().map(|&s| lam[s]).collect();
                    encode(&sub, &radices[j])
                })
                .collect();
            for (xi, x) in tuples(&ins).enumerate() {
                // outer product of per-party response rows
                let mut acc = vec![w];
                for j in 0..n {
                    let o = outs[j];
                    let base = (lidx[j] * ins[j] + x[j]) * o;
                    let row = &table(j)[base..base + o];
                    let mut next = Vec::with_capacity(acc.len() * o);
                    for &v in &acc {
                        for &r in row {
                            next.push(v * r);
                        }
                    }
                    acc = next;
                }
                let slice = &mut probs[xi * n_out..(xi + 1) * n_out];
                for (p, v) in slice.iter_mut().zip(acc) {
                    *p += v;
                }
            }
        }
        probs
    }
}

impl LocalModel {
    /// Derivative of every probability with respect to every parameter, in
    /// the flat order of [`flatten`]: one column per parameter.
    fn jacobian(&self, net: &Network, scen: &Scenario) -> Vec<Vec<f64>> {
        let n = net.num_parties();
        let ins = scen.inputs();
        let outs = scen.outputs();
        let n_out = scen.num_outputs();
        let psrc: Vec<Vec<usize>> = (0..n).map(|j| net.party_sources(j)).collect();
        let radices: Vec<Vec<usize>> = (0..n).map(|j| lambda_radix(net, &self.cards, j)).collect();
        let mut offset = Vec::new();
        let mut total = 0;
        for w in self.weights.iter().chain(&self.responses) {
            offset.push(total);
            total += w.len();
        }
        let ns = self.weights.len();
        let mut jac = vec![vec![0.0; scen.size()]; total];
        let outcome_tuples: Vec<Vec<usize>> = tuples(&outs).collect();
        for lam in tuples(&self.cards) {
            let ws: Vec<f64> = lam.iter().enumerate().map(|(i, &l)| self.weights[i][l]).collect();
            let w: f64 = ws.iter().product();
            let lidx: Vec<usize> = (0..n)
                .map(|j| {
                    let sub: Vec<usize> = psrc[j].iter().map(|&s| lam[s]).collect();
                    encode(&sub, &radices[j])
                })
                .collect();
            for (xi, x) in tuples(&ins).enumerate() {
                let bases: Vec<usize> = (0..n).map(|j| (lidx[j] * ins[j] + x[j]) * outs[j]).collect();
                for (ai, a) in outcome_tuples.iter().enumerate() {
                    let out = xi * n_out + ai;
                    let rows: Vec<f64> = (0..n).map(|j| self.responses[j][bases[j] + a[j]]).collect();
                    let all: f64 = rows.iter().product();
                    for j in 0..n {
                        let others: f64 = (0..n).filter(|&k| k != j).map(|k| rows[k]).product();
                        jac[offset[ns + j] + bases[j] + a[j]][out] += w * others;
                    }
                    for (i, &l) in lam.iter().enumerate() {
                        let others: f64 = (0..ns).filter(|&k| k != i).map(|k| ws[k]).product();
                        jac[offset[i] + l][out] += others * all;
                    }
                }
            }
        }
        jac
    }
}

fn random_simplex<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    // exponential spacings give a uniform point on the simplex
    let raw: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let s: f64 = raw.iter().sum();
    let mut w: Vec<f64> = raw.iter().map(|v| v / s).collect();
    fix_simplex(&mut w);
    w
}

/// Clamps tiny negatives from LP round-off and renormalizes exactly.
fn fix_simplex(w: &mut [f64]) {
    for v in w.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let s: f64 = w.iter().sum();
    if s <= 0.0 {
        let u = 1.0 / w.len() as f64;
        w.iter_mut().for_each(|v| *v = u);
        return;
    }
    w.iter_mut().for_each(|v| *v /= s);
    // push the remaining rounding error into the largest entry
    let s: f64 = w.iter().sum();
    if let Some((k, _)) = w.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)) {
        w[k] += 1.0 - s;
    }
}

/// Number of deterministic functions from inputs to outputs: `o^s`.
pub fn deterministic_cardinality(scenario: &Scenario) -> Vec<usize> {
    scenario
        .parties
        .iter()
        .map(|p| p.outputs.pow(p.inputs as u32))
        .collect()
}

/// Cap applied to default source cardinalities.
pub const DEFAULT_CARD_CAP: usize = 64;

/// Product over attached parties of their deterministic cardinality, capped
/// at [`DEFAULT_CARD_CAP`]. The flag reports whether the cap was hit.
pub fn default_cards(net: &Network) -> (Vec<usize>, bool) {
    let det = deterministic_cardinality(&net.scenario());
    let mut capped = false;
    let cards = (0..net.sources.len())
        .map(|s| {
            let c = net
                .source_parties(s)
                .iter()
                .fold(1usize, |acc, &j| acc.saturating_mul(det[j]));
            if c > DEFAULT_CARD_CAP {
                capped = true;
                DEFAULT_CARD_CAP
            } else {
                c
            }
        })
        .collect();
    (cards, capped)
}

#[derive(Debug, Clone)]
pub struct FitOptions {
    pub cards: Vec<usize>,
    pub restarts: usize,
    pub iters: usize,
    pub seed: u64,
    /// Levenberg-Marquardt steps on the squared error before the LP sweeps.
    pub smooth_iters: usize,
    /// Stop early once the distance drops below this value.
    pub target: f64,
}

impl FitOptions {
    pub fn new(cards: Vec<usize>) -> Self {
        FitOptions { cards, restarts: 10, iters: 50, smooth_iters: 200, seed: 0, target: 1e-10 }
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub model: LocalModel,
    pub distance: f64,
    /// Distance after each alternating sweep of the best restart.
    pub history: Vec<f64>,
}

/// Minimizes `1/2 |M z - d|_1` over `z` with the given per-group simplex
/// constraints, where each group of `z` must sum to one.
fn tv_lp(columns: &[Vec<f64>], target: &[f64], groups: &[std::ops::Range<usize>]) -> Option<Vec<f64>> {
    let nz = columns.len();
    let n = target.len();
    let mut p = LpProblem::<f64>::new(nz + n);
    for g in groups {
        let mut row = vec![0.0; nz + n];
        for k in g.clone() {
            row[k] = 1.0;
        }
        p.add_eq(row, 1.0);
    }
    for r in 0..n {
        // M z - t <= d  and  -M z - t <= -d
        let mut up = vec![0.0; nz + n];
        let mut dn = vec![0.0; nz + n];
        for (k, col) in columns.iter().enumerate() {
            up[k] = col[r];
            dn[k] = -col[r];
        }
        up[nz + r] = -1.0;
        dn[nz + r] = -1.0;
        p.add_le(up, target[r]);
        p.add_le(dn, -target[r]);
    }
    let mut c = vec![0.0; nz + n];
    for v in c.iter_mut().skip(nz) {
        *v = 0.5;
    }
    p.objective = Some(c);
    match lp::solve(&p).ok()?.status {
        LpStatus::Feasible(z) => Some(z[..nz].to_vec()),
        _ => None,
    }
}

fn source_step(model: &mut LocalModel, net: &Network, d: &Distribution, i: usize) {
    let card = model.cards[i];
    let scen = &d.scenario;
    let columns: Vec<Vec<f64>> = (0..card)
        .map(|l| {
            let mut m = model.clone();
            m.weights[i] = (0..card).map(|k| if k == l { 1.0 } else { 0.0 }).collect();
            m.tensor(net, scen, None)
        })
        .collect();
    if let Some(mut w) = tv_lp(&columns, &d.probs, &[0..card]) {
        fix_simplex(&mut w);
        model.weights[i] = w;
    }
}

fn party_step(model: &mut LocalModel, net: &Network, d: &Distribution, j: usize) {
    let scen = &d.scenario;
    let len = model.responses[j].len();
    let o = net.parties[j].outputs;
    // the distribution is linear in party j's table: one column per entry
    let mut unit = vec![0.0; len];
    let columns: Vec<Vec<f64>> = (0..len)
        .map(|k| {
            unit[k] = 1.0;
            let col = model.tensor(net, scen, Some((j, &unit)));
            unit[k] = 0.0;
            col
        })
        .collect();
    let groups: Vec<_> = (0..len / o).map(|g| g * o..(g + 1) * o).collect();
    if let Some(mut t) = tv_lp(&columns, &d.probs, &groups) {
        for row in t.chunks_mut(o) {
            fix_simplex(row);
        }
        model.responses[j] = t;
    }
}

/// Flat parameter vector of a model, with the simplex groups it splits into.
fn flatten(model: &LocalModel, net: &Network) -> (Vec<f64>, Vec<std::ops::Range<usize>>) {
    let mut flat = Vec::new();
    let mut groups = Vec::new();
    for w in &model.weights {
        groups.push(flat.len()..flat.len() + w.len());
        flat.extend_from_slice(w);
    }
    for (j, t) in model.responses.iter().enumerate() {
        let o = net.parties[j].outputs;
        for row in t.chunks(o) {
            groups.push(flat.len()..flat.len() + o);
            flat.extend_from_slice(row);
        }
    }
    (flat, groups)
}

fn unflatten(model: &mut LocalModel, flat: &[f64]) {
    let mut k = 0;
    for w in model.weights.iter_mut().chain(model.responses.iter_mut()) {
        let len = w.len();
        w.copy_from_slice(&flat[k..k + len]);
        k += len;
    }
}

/// Levenberg-Marquardt on `1/2 |P - d|^2`, all blocks at once. Each simplex
/// group is parametrized as `u_k^2 / sum u^2`, which keeps the model valid
/// without projections.
fn smooth_phase(model: &mut LocalModel, net: &Network, d: &Distribution, iters: usize) {
    let scen = &d.scenario;
    let (x0, groups) = flatten(model, net);
    let mut u: Vec<f64> = x0.iter().map(|v| v.sqrt()).collect();
    let to_x = |u: &[f64]| -> Vec<f64> {
        let mut x = vec![0.0; u.len()];
        for g in &groups {
            let s: f64 = u[g.clone()].iter().map(|v| v * v).sum();
            for k in g.clone() {
                x[k] = if s > 0.0 { u[k] * u[k] / s } else { 1.0 / g.len() as f64 };
            }
        }
        x
    };
    let mut work = model.clone();
    let residual = |x: &[f64], work: &mut LocalModel| -> (f64, Vec<f64>) {
        unflatten(work, x);
        let res: Vec<f64> = work.tensor(net, scen, None).iter().zip(&d.probs).map(|(p, q)| p - q).collect();
        (0.5 * res.iter().map(|r| r * r).sum::<f64>(), res)
    };
    let mut x = to_x(&u);
    let (mut f, mut res) = residual(&x, &mut work);
    let np = u.len();
    let mut mu = 1e-3;
    for _ in 0..iters {
        if f < 1e-30 {
            break;
        }
        unflatten(&mut work, &x);
        let jp = work.jacobian(net, scen);
        // chain rule through the squared parametrization, group by group
        let mut ju = vec![vec![0.0; res.len()]; np];
        for g in &groups {
            let s: f64 = u[g.clone()].iter().map(|v| v * v).sum();
            if s <= 0.0 {
                continue;
            }
            for l in g.clone() {
                for k in g.clone() {
                    let dkl = (if k == l { u[k] } else { 0.0 } - x[k] * u[l]) * 2.0 / s;
                    if dkl != 0.0 {
                        for (o, v) in ju[l].iter_mut().enumerate() {
                            *v += jp[k][o] * dkl;
                        }
                    }
                }
            }
        }
        let mut a = RMatrix::zeros(np, np);
        let mut g = vec![0.0; np];
        for i in 0..np {
            g[i] = ju[i].iter().zip(&res).map(|(j, r)| j * r).sum();
            for k in i..np {
                let v: f64 = ju[i].iter().zip(&ju[k]).map(|(p, q)| p * q).sum();
                a.set(i, k, v);
                a.set(k, i, v);
            }
        }
        let scale = (0..np).map(|i| a.get(i, i)).fold(0.0f64, f64::max).max(1e-300);
        let mut improved = false;
        for _ in 0..30 {
            let mut damped = a.clone();
            for i in 0..np {
                damped.set(i, i, a.get(i, i) + mu * scale);
            }
            let neg: Vec<f64> = g.iter().map(|v| -v).collect();
            if let Some(step) = cholesky_solve(&damped, &neg) {
                let un: Vec<f64> = u.iter().zip(&step).map(|(a, b)| a + b).collect();
                let xn = to_x(&un);
                let (fn_, rn) = residual(&xn, &mut work);
                if fn_ < f {
                    u = un;
                    x = xn;
                    f = fn_;
                    res = rn;
                    mu = (mu / 3.0).max(1e-15);
                    improved = true;
                    break;
                }
            }
            mu *= 4.0;
        }
        if !improved {
            break;
        }
        // keep each group of u on the unit sphere
        for g in &groups {
            let s: f64 = u[g.clone()].iter().map(|v| v * v).sum::<f64>().sqrt();
            if s > 0.0 {
                u[g.clone()].iter_mut().for_each(|v| *v /= s);
            }
        }
    }
    unflatten(model, &x);
    for w in model.weights.iter_mut() {
        fix_simplex(w);
    }
    for (j, tab) in model.responses.iter_mut().enumerate() {
        for row in tab.chunks_mut(net.parties[j].outputs) {
            fix_simplex(row);
        }
    }
}

fn distance(model: &LocalModel, net: &Network, d: &Distribution) -> f64 {
    let probs = model.tensor(net, &d.scenario, None);
    0.5 * probs.iter().zip(&d.probs).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Search for a network-local model close to `d` in total variation. Each
/// restart first runs Levenberg-Marquardt on the squared error, then
/// alternating LP sweeps on the total variation. Each block (one source's weights, or one party's responses)
/// is re-optimized exactly with the others fixed; a block update is kept
/// only if it does not increase the distance. The result is an upper bound
/// on the true distance to the local set, never a proof of nonlocality.
pub fn fit(d: &Distribution, net: &Network, opts: &FitOptions) -> Result<FitResult> {
    if d.scenario != net.scenario() {
        return Err(Error::Scenario("distribution does not match the network scenario".into()));
    }
    if opts.cards.len() != net.sources.len() || opts.cards.iter().any(|&c| c == 0) {
        return Err(Error::InvalidArgument("need one positive cardinality per source".into()));
    }
    let mut best: Option<FitResult> = None;
    for r in 0..opts.restarts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(r as u64));
        let mut model = LocalModel::random(net, &opts.cards, false, &mut rng);
        smooth_phase(&mut model, net, d, opts.smooth_iters);
        let mut dist = distance(&model, net, d);
        let mut history = vec![dist];
        for _ in 0..opts.iters {
            let before = dist;
            for i in 0..net.sources.len() {
                let mut trial = model.clone();
                source_step(&mut trial, net, d, i);
                let td = distance(&trial, net, d);
                if td <= dist {
                    model = trial;
                    dist = td;
                }
            }
            for j in 0..net.num_parties() {
                let mut trial = model.clone();
                party_step(&mut trial, net, d, j);
                let td = distance(&trial, net, d);
                if td <= dist {
                    model = trial;
                    dist = td;
                }
            }
            history.push(dist);
            if dist < opts.target || before - dist < 1e-12 {
                break;
            }
        }
        let better = best.as_ref().map_or(true, |b| dist < b.distance);
        if better {
            best = Some(FitResult { model, distance: dist, history });
        }
        if best.as_ref().is_some_and(|b| b.distance < opts.target) {
            break;
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Correlators of a bilocal binary-output scenario indexed by bit patterns.
///
/// Each party with `s` inputs and `2^r` outputs contributes `s * r` bits;
/// bit `x * r + t` is bit `t` of the outcome at input `x`. A full pattern is
/// `(i << (nb + nc)) | (j << nc) | k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorModel {
    pub inputs: [usize; 3],
    pub out_bits: [usize; 3],
    pub e: Vec<f64>,
}

/// In-place Walsh-Hadamard transform (unnormalized).
fn walsh_hadamard(v: &mut [f64]) {
    let n = v.len();
    let mut h = 1;
    while h < n {
        for blk in (0..n).step_by(2 * h) {
            for k in blk..blk + h {
                let (a, b) = (v[k], v[k + h]);
                v[k] = a + b;
                v[k + h] = a - b;
            }
        }
        h *= 2;
    }
}

impl CorrelatorModel {
    fn field_bits(&self) -> [usize; 3] {
        [0, 1, 2].map(|p| self.inputs[p] * self.out_bits[p])
    }

    pub fn total_bits(&self) -> usize {
        self.field_bits().iter().sum()
    }

    /// Weights of the deterministic strategies, indexed like the patterns.
    pub fn q(&self) -> Vec<f64> {
        let mut q = self.e.clone();
        walsh_hadamard(&mut q);
        let norm = q.len() as f64;
        q.iter_mut().for_each(|v| *v /= norm);
        q
    }

    pub fn from_q(inputs: [usize; 3], out_bits: [usize; 3], q: &[f64]) -> Self {
        let mut e = q.to_vec();
        walsh_hadamard(&mut e);
        CorrelatorModel { inputs, out_bits, e }
    }

    fn split(&self, tau: usize) -> [usize; 3] {
        let [na, nb, nc] = self.field_bits();
        let _ = na;
        [tau >> (nb + nc), (tau >> nc) & ((1 << nb) - 1), tau & ((1 << nc) - 1)]
    }

    fn join(&self, p: [usize; 3]) -> usize {
        let [_, nb, nc] = self.field_bits();
        (p[0] << (nb + nc)) | (p[1] << nc) | p[2]
    }

    /// Input block of a single-party pattern, or `None` when the pattern
    /// spans several inputs and so is never jointly observed.
    fn block(&self, party: usize, pat: usize) -> Option<usize> {
        if pat == 0 {
            return Some(0);
        }
        let r = self.out_bits[party];
        let mask = (1 << r) - 1;
        let used: Vec<usize> = (0..self.inputs[party]).filter(|&x| (pat >> (x * r)) & mask != 0).collect();
        (used.len() == 1).then(|| used[0])
    }

    fn observable(&self, tau: usize) -> bool {
        let p = self.split(tau);
        (0..3).all(|k| self.block(k, p[k]).is_some())
    }

    /// Output of a deterministic strategy `sigma` for party `k` at input `x`.
    fn strategy_output(&self, party: usize, pat: usize, x: usize) -> usize {
        let r = self.out_bits[party];
        (pat >> (x * r)) & ((1 << r) - 1)
    }

    /// Bilocal model reading `q` as a distribution over deterministic
    /// strategies with A and C independent: A and C keep their strategy as
    /// the source symbol, B samples its strategy conditioned on both.
    pub fn to_local_model(&self, net: &Network) -> Result<LocalModel> {
        let mut q = self.q();
        fix_simplex(&mut q);
        let [na, nb, nc] = self.field_bits();
        let (ca, cb, cc) = (1usize << na, 1usize << nb, 1usize << nc);
        let mut qa = vec![0.0; ca];
        let mut qc = vec![0.0; cc];
        let mut qac = vec![0.0; ca * cc];
        for (tau, &v) in q.iter().enumerate() {
            let [a, _, c] = self.split(tau);
            qa[a] += v;
            qc[c] += v;
            qac[a * cc + c] += v;
        }
        fix_simplex(&mut qa);
        fix_simplex(&mut qc);
        let scen = net.scenario();
        let sh = &scen.parties;
        let resp_det = |party: usize, card: usize| -> Vec<f64> {
            let (s, o) = (sh[party].inputs, sh[party].outputs);
            let mut t = vec![0.0; card * s * o];
            for l in 0..card {
                for x in 0..s {
                    t[(l * s + x) * o + self.strategy_output(party, l, x)] = 1.0;
                }
            }
            t
        };
        let (sb, ob) = (sh[1].inputs, sh[1].outputs);
        let mut tb = vec![0.0; ca * cc * sb * ob];
        for a in 0..ca {
            for c in 0..cc {
                let z = qac[a * cc + c];
                let li = a * cc + c;
                for y in 0..sb {
                    let row = &mut tb[(li * sb + y) * ob..(li * sb + y + 1) * ob];
                    if z <= 1e-300 {
                        row.iter_mut().for_each(|v| *v = 1.0 / ob as f64);
                        continue;
                    }
                    for b in 0..cb {
                        let v = q[self.join([a, b, c])] / z;
                        row[self.strategy_output(1, b, y)] += v;
                    }
                    fix_simplex(row);
                }
            }
        }
        LocalModel::new(net, vec![ca, cc], vec![qa, qc], vec![resp_det(0, ca), tb, resp_det(2, cc)])
    }
}

fn out_bits_of(o: usize) -> Option<usize> {
    (o >= 2 && o.is_power_of_two()).then(|| o.trailing_zeros() as usize)
}

/// Observed correlator of pattern `tau`, computed from `d`.
fn observed_e(m: &CorrelatorModel, d: &Distribution, tau: usize) -> f64 {
    let p = m.split(tau);
    let x: Vec<usize> = (0..3).map(|k| m.block(k, p[k]).expect("observable pattern")).collect();
    let outs = d.scenario.outputs();
    let masks: Vec<usize> = (0..3)
        .map(|k| m.strategy_output(k, p[k], x[k]))
        .collect();
    d.slice(&x)
        .iter()
        .enumerate()
        .map(|(ai, &pr)| {
            let a = decode(ai, &outs);
            let par: u32 = (0..3).map(|k| (a[k] & masks[k]).count_ones()).sum();
            if par % 2 == 0 {
                pr
            } else {
                -pr
            }
        })
        .sum()
}

#[derive(Debug, Clone)]
pub struct CorrelatorFit {
    pub model: CorrelatorModel,
    pub local: LocalModel,
    pub distance: f64,
}

struct Layout {
    free: Vec<usize>,
    /// `(i0k, i00, 00k)` index triples for the independence constraints.
    pairs: Vec<(usize, usize, usize)>,
    /// Free patterns that only involve A or only C.
    marginal_free: Vec<usize>,
}

fn layout(m: &CorrelatorModel) -> Layout {
    let [na, _, nc] = m.field_bits();
    let total = 1usize << m.total_bits();
    let free: Vec<usize> = (0..total).filter(|&t| !m.observable(t)).collect();
    let mut pairs = Vec::new();
    for i in 1..(1usize << na) {
        for k in 1..(1usize << nc) {
            pairs.push((m.join([i, 0, k]), m.join([i, 0, 0]), m.join([0, 0, k])));
        }
    }
    let marginal_free = free
        .iter()
        .copied()
        .filter(|&t| {
            let [a, b, c] = m.split(t);
            b == 0 && (a == 0 || c == 0)
        })
        .collect();
    Layout { free, pairs, marginal_free }
}

fn penalty(m: &CorrelatorModel, lay: &Layout, grad: Option<&mut Vec<f64>>) -> f64 {
    let q = m.q();
    let norm = q.len() as f64;
    let neg: Vec<f64> = q.iter().map(|&v| v.min(0.0)).collect();
    let mut f: f64 = neg.iter().map(|v| v * v).sum();
    let mut g = neg.clone();
    if grad.is_some() {
        walsh_hadamard(&mut g);
        g.iter_mut().for_each(|v| *v *= 2.0 / norm);
    }
    for &(t, ti, tk) in &lay.pairs {
        let r = m.e[t] - m.e[ti] * m.e[tk];
        f += r * r;
        if grad.is_some() {
            g[t] += 2.0 * r;
            g[ti] -= 2.0 * r * m.e[tk];
            g[tk] -= 2.0 * r * m.e[ti];
        }
    }
    if let Some(out) = grad {
        *out = g;
    }
    f
}

/// Fixes the A-only and C-only free correlators, sets every unobserved
/// `e_{i0k}` to the product, and solves the rest as an LP minimizing the
/// total negative weight, which is returned.
fn polish(m: &mut CorrelatorModel, lay: &Layout) -> f64 {
    for &(t, ti, tk) in &lay.pairs {
        if !m.observable(t) {
            m.e[t] = m.e[ti] * m.e[tk];
        }
    }
    let fixed_by_pairs: std::collections::HashSet<usize> = lay.pairs.iter().map(|p| p.0).collect();
    let vars: Vec<usize> = lay
        .free
        .iter()
        .copied()
        .filter(|t| !lay.marginal_free.contains(t) && !fixed_by_pairs.contains(t))
        .collect();
    let total = m.e.len();
    let norm = total as f64;
    let nv = vars.len();
    // q_sigma = base_sigma + sum_v H[sigma][v] w_v / norm, slack s_sigma >= -q_sigma
    let mut base = m.e.clone();
    for &v in &vars {
        base[v] = 0.0;
    }
    walsh_hadamard(&mut base);
    let mut p = LpProblem::<f64>::new(nv + total);
    for k in 0..nv {
        p.lower[k] = Some(-1.0);
        p.upper[k] = Some(1.0);
    }
    for sigma in 0..total {
        let mut row = vec![0.0; nv + total];
        for (k, &v) in vars.iter().enumerate() {
            let sign = if (sigma & v).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            row[k] = -sign / norm;
        }
        row[nv + sigma] = -1.0;
        p.add_le(row, base[sigma] / norm);
    }
    let mut c = vec![0.0; nv + total];
    for v in c.iter_mut().skip(nv) {
        *v = 1.0;
    }
    p.objective = Some(c);
    if let Ok(r) = lp::solve(&p) {
        if let LpStatus::Feasible(z) = r.status {
            for (k, &v) in vars.iter().enumerate() {
                m.e[v] = z[k];
            }
            return r.objective.unwrap_or(f64::INFINITY);
        }
    }
    f64::INFINITY
}

/// Compass search over the A-only and C-only correlators, scored by the
/// polish LP. These are the only coordinates entering the independence
/// constraints nonlinearly, so the gradient phase only has to land nearby.
fn refine_marginals(m: &mut CorrelatorModel, lay: &Layout) -> f64 {
    let mut best = m.clone();
    let mut score = polish(&mut best, lay);
    let mut step = 0.25;
    while step > 1e-7 && score > 1e-13 {
        let mut improved = false;
        for &t in &lay.marginal_free {
            for dir in [1.0, -1.0] {
                let mut trial = best.clone();
                trial.e[t] = (best.e[t] + dir * step).clamp(-1.0, 1.0);
                if trial.e[t] == best.e[t] {
                    continue;
                }
                let s = polish(&mut trial, lay);
                if s < score {
                    best = trial;
                    score = s;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    *m = best;
    score
}

#[derive(Debug, Clone)]
pub struct CorrelatorFitOptions {
    pub restarts: usize,
    pub iters: usize,
    pub seed: u64,
}

impl Default for CorrelatorFitOptions {
    fn default() -> Self {
        CorrelatorFitOptions { restarts: 20, iters: 3000, seed: 0 }
    }
}

/// Searches the unobserved correlators of a bilocal distribution for a
/// nonnegative strategy distribution with A and C independent. Each restart
/// runs projected gradient descent on the squared violations, then a compass
/// search over the A-only and C-only correlators where each point is scored
/// by an LP over the remaining ones. The reported
/// distance is the total-variation distance between `d` and the explicit
/// local model read off the result; zero certifies bilocality, a positive
/// value means only that no model was found.
pub fn bilocal_correlator_fit(d: &Distribution, opts: &CorrelatorFitOptions) -> Result<CorrelatorFit> {
    let sh = &d.scenario.parties;
    if sh.len() != 3 {
        return Err(Error::Scenario("bilocal scenario needs three parties".into()));
    }
    let mut bits = [0; 3];
    for k in 0..3 {
        bits[k] = out_bits_of(sh[k].outputs).ok_or_else(|| {
            Error::Scenario(format!("party {k} has {} outputs; need a power of two", sh[k].outputs))
        })?;
    }
    let inputs = [sh[0].inputs, sh[1].inputs, sh[2].inputs];
    let total_bits: usize = (0..3).map(|k| inputs[k] * bits[k]).sum();
    if total_bits > 16 {
        return Err(Error::InvalidArgument(format!("{total_bits} strategy bits is beyond desk scale")));
    }
    let net = Network::bilocal((inputs[0], sh[0].outputs), (inputs[1], sh[1].outputs), (inputs[2], sh[2].outputs));
    let mut m = CorrelatorModel { inputs, out_bits: bits, e: vec![0.0; 1 << total_bits] };
    let observed: Vec<usize> = (0..m.e.len()).filter(|&t| m.observable(t)).collect();
    for &t in &observed {
        m.e[t] = observed_e(&m, d, t);
    }
    let lay = layout(&m);
    let mut best: Option<CorrelatorFit> = None;
    for r in 0..opts.restarts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(r as u64));
        let mut cur = m.clone();
        for &t in &lay.free {
            cur.e[t] = rng.gen_range(-1.0..1.0);
        }
        let mut grad = Vec::new();
        let mut f = penalty(&cur, &lay, Some(&mut grad));
        let mut step = 1.0;
        for _ in 0..opts.iters {
            if f < 1e-24 {
                break;
            }
            let mut accepted = false;
            while step > 1e-12 {
                let mut trial = cur.clone();
                for &t in &lay.free {
                    trial.e[t] = (cur.e[t] - step * grad[t]).clamp(-1.0, 1.0);
                }
                let ft = penalty(&trial, &lay, None);
                if ft < f {
                    cur = trial;
                    f = penalty(&cur, &lay, Some(&mut grad));
                    step *= 1.5;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        refine_marginals(&mut cur, &lay);
        let local = cur.to_local_model(&net)?;
        let dist = local.evaluate(&net)?.tv_distance(d);
        if best.as_ref().map_or(true, |b| dist < b.distance) {
            best = Some(CorrelatorFit { model: cur, local, distance: dist });
        }
        if best.as_ref().is_some_and(|b| b.distance < 1e-12) {
            break;
        }
    }
    Ok(best.expect("at least one restart"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::no_signaling_check;

    #[test]
    fn cardinalities_are_outputs_to_the_inputs() {
        let sc = Scenario::new(vec![(2, 2), (1, 4), (3, 2)]);
        assert_eq!(deterministic_cardinality(&sc), vec![4, 4, 8]);
    }

    #[test]
    fn trivial_model_is_point_mass() {
        let net = Network::triangle(2);
        let m = LocalModel::deterministic(&net, vec![1; 3], vec![vec![1.0]; 3], |j, _, _| j % 2).unwrap();
        let d = m.evaluate(&net).unwrap();
        assert_eq!(d.p(&[0, 0, 0], &[0, 1, 0]), 1.0);
    }

    #[test]
    fn random_models_are_no_signaling() {
        let net = Network::bilocal((2, 2), (1, 4), (2, 2));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let m = LocalModel::random(&net, &[3, 2], false, &mut rng);
            let d = m.evaluate(&net).unwrap();
            assert!(no_signaling_check(&d, 1e-12).passed);
        }
    }

    #[test]
    fn fourier_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let q = random_simplex(64, &mut rng);
        let m = CorrelatorModel::from_q([2, 1, 2], [1, 2, 1], &q);
        assert!((m.e[0] - 1.0).abs() < 1e-12);
        for (a, b) in m.q().iter().zip(&q) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn deterministic_zeros_fit_exactly() {
        let d = Distribution::deterministic(Scenario::new(vec![(2, 2), (1, 4), (2, 2)]), &[0, 0, 0]);
        let r = bilocal_correlator_fit(&d, &CorrelatorFitOptions::default()).unwrap();
        assert!(r.distance < 1e-12, "distance {}", r.distance);
    }

    #[test]
    fn fit_recovers_deterministic_point() {
        let net = Network::triangle(2);
        let d = Distribution::deterministic(net.scenario(), &[1, 0, 1]);
        let r = fit(&d, &net, &FitOptions::new(vec![2, 2, 2])).unwrap();
        assert!(r.distance < 1e-9);
    }
}
