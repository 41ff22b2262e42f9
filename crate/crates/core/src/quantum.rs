//! Finite-dimensional quantum strategies on networks and the network Born rule.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64, I, ONE, ZERO};
use crate::model::{decode, encode, Distribution, Network};

/// Tolerance for Hermiticity, positivity, trace and completeness checks.
pub const QTOL: f64 = 1e-9;

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Pauli matrix: 0 identity, 1 X, 2 Y, 3 Z.
pub fn pauli(k: usize) -> CMatrix {
    match k {
        0 => CMatrix::identity(2),
        1 => CMatrix::from_rows(&[vec![ZERO, ONE], vec![ONE, ZERO]]),
        2 => CMatrix::from_rows(&[vec![ZERO, -I], vec![I, ZERO]]),
        3 => CMatrix::from_rows(&[vec![ONE, ZERO], vec![ZERO, -ONE]]),
        _ => panic!("pauli index {k} out of range"),
    }
}

/// `(X + sign * Z) / sqrt(2)`.
pub fn diagonal_observable(sign: f64) -> CMatrix {
    (&pauli(1) + &pauli(3).scale_re(sign)).scale_re(FRAC_1_SQRT_2)
}

fn ket2(amps: [f64; 4]) -> Vec<C64> {
    amps.iter().map(|&a| c(a * FRAC_1_SQRT_2, 0.0)).collect()
}

pub fn phi_plus() -> Vec<C64> {
    ket2([1.0, 0.0, 0.0, 1.0])
}

pub fn phi_minus() -> Vec<C64> {
    ket2([1.0, 0.0, 0.0, -1.0])
}

pub fn psi_plus() -> Vec<C64> {
    ket2([0.0, 1.0, 1.0, 0.0])
}

pub fn psi_minus() -> Vec<C64> {
    ket2([0.0, 1.0, -1.0, 0.0])
}

/// `(|0..0> + |1..1>) / sqrt(2)` on `m` qubits.
pub fn ghz_ket(m: usize) -> Vec<C64> {
    let d = 1 << m;
    let mut v = vec![ZERO; d];
    v[0] = c(FRAC_1_SQRT_2, 0.0);
    v[d - 1] = c(FRAC_1_SQRT_2, 0.0);
    v
}

/// Bell basis `[psi_00, psi_01, psi_10, psi_11]`; outcome index `2*b0 + b1`.
pub fn bell_basis() -> Vec<Vec<C64>> {
    vec![phi_plus(), psi_plus(), phi_minus(), psi_minus()]
}

/// Elegant joint measurement basis, components in the computational basis
/// `|00>, |01>, |10>, |11>`.
pub fn ejm_basis() -> Vec<Vec<C64>> {
    let s = 1.0 / 8f64.sqrt();
    let rows = [
        [c(-1.0, -1.0), ZERO, c(0.0, -2.0), c(-1.0, 1.0)],
        [c(1.0, -1.0), c(0.0, 2.0), ZERO, c(1.0, 1.0)],
        [c(-1.0, 1.0), c(0.0, 2.0), ZERO, c(-1.0, -1.0)],
        [c(1.0, 1.0), ZERO, c(0.0, -2.0), c(1.0, -1.0)],
    ];
    rows.iter().map(|r| r.iter().map(|z| z * s).collect()).collect()
}

fn check_visibility(v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::InvalidArgument(format!("visibility {v} outside [0, 1]")));
    }
    Ok(())
}

/// `v |phi+><phi+| + (1 - v) I/4`.
pub fn isotropic_state(v: f64) -> Result<CMatrix> {
    check_visibility(v)?;
    Ok(noisy(&phi_plus(), v))
}

/// `v |psi-><psi-| + (1 - v) I/4`.
pub fn werner_state(v: f64) -> Result<CMatrix> {
    check_visibility(v)?;
    Ok(noisy(&psi_minus(), v))
}

fn noisy(ket: &[C64], v: f64) -> CMatrix {
    let d = ket.len();
    &CMatrix::projector(ket).scale_re(v) + &CMatrix::identity(d).scale_re((1.0 - v) / d as f64)
}

/// Single-site Pauli label used by [`PauliString`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn index(self) -> usize {
        match self {
            Pauli::I => 0,
            Pauli::X => 1,
            Pauli::Y => 2,
            Pauli::Z => 3,
        }
    }

    /// Product `self * other` as (power of i, site label).
    fn mul(self, other: Pauli) -> (u8, Pauli) {
        use Pauli::*;
        match (self, other) {
            (I, p) | (p, I) => (0, p),
            (a, b) if a == b => (0, I),
            (X, Y) => (1, Z),
            (Y, Z) => (1, X),
            (Z, X) => (1, Y),
            (Y, X) => (3, Z),
            (Z, Y) => (3, X),
            (X, Z) => (3, Y),
            _ => unreachable!(),
        }
    }
}

/// Tensor product of Pauli matrices with a phase `i^phase`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PauliString {
    pub phase: u8,
    pub sites: Vec<Pauli>,
}

impl PauliString {
    pub fn new(sites: Vec<Pauli>) -> Self {
        PauliString { phase: 0, sites }
    }

    pub fn identity(m: usize) -> Self {
        Self::new(vec![Pauli::I; m])
    }

    pub fn mul(&self, other: &PauliString) -> PauliString {
        let mut phase = self.phase + other.phase;
        let sites = self
            .sites
            .iter()
            .zip(&other.sites)
            .map(|(&a, &b)| {
                let (p, s) = a.mul(b);
                phase += p;
                s
            })
            .collect();
        PauliString { phase: phase % 4, sites }
    }

    pub fn matrix(&self) -> CMatrix {
        let ms: Vec<CMatrix> = self.sites.iter().map(|p| pauli(p.index())).collect();
        let ph = [ONE, I, -ONE, -I][self.phase as usize];
        CMatrix::kron_all(&ms).scale(ph)
    }
}

/// Commuting generators of the star center's measurement on `m` qubits:
/// `X..X` first, then `Z` on sites `k-1, k` with `X` elsewhere.
pub fn star_generators(m: usize) -> Vec<PauliString> {
    let mut gens = vec![PauliString::new(vec![Pauli::X; m])];
    for k in 1..m {
        let mut sites = vec![Pauli::X; m];
        sites[k - 1] = Pauli::Z;
        sites[k] = Pauli::Z;
        gens.push(PauliString::new(sites));
    }
    gens
}

/// Pauli string with `Z` on `subset` and `X` elsewhere.
pub fn star_observable(m: usize, subset: &[usize]) -> PauliString {
    let mut sites = vec![Pauli::X; m];
    for &k in subset {
        sites[k] = Pauli::Z;
    }
    PauliString::new(sites)
}

/// Writes `target` as `sign * prod_{k in T} g_k` over the star generators.
/// Returns `None` when the target is outside the generated group.
pub fn star_decomposition(m: usize, target: &PauliString) -> Option<(f64, Vec<usize>)> {
    let gens = star_generators(m);
    for mask in 0usize..(1 << m) {
        let mut prod = PauliString::identity(m);
        for (k, g) in gens.iter().enumerate() {
            if mask >> k & 1 == 1 {
                prod = prod.mul(g);
            }
        }
        if prod.sites == target.sites {
            let rel = (4 + target.phase - prod.phase) % 4;
            let sign = match rel {
                0 => 1.0,
                2 => -1.0,
                _ => return None,
            };
            return Some((sign, (0..m).filter(|k| mask >> k & 1 == 1).collect()));
        }
    }
    None
}

/// Rank-one projectors onto the joint eigenbasis of [`star_generators`];
/// outcome bit `b_k` marks eigenvalue `(-1)^{b_k}` of `g_k`, `b_1` most significant.
pub fn star_basis_effects(m: usize) -> Vec<CMatrix> {
    let d = 1 << m;
    let gens: Vec<CMatrix> = star_generators(m).iter().map(|g| g.matrix()).collect();
    (0..d)
        .map(|b| {
            let bits = decode(b, &vec![2; m]);
            let mut proj = CMatrix::identity(d);
            for (g, &bit) in gens.iter().zip(&bits) {
                let sign = if bit == 0 { 1.0 } else { -1.0 };
                let half = (&CMatrix::identity(d) + &g.scale_re(sign)).scale_re(0.5);
                proj = &proj * &half;
            }
            proj
        })
        .collect()
}

/// A source state routed to party slots.
#[derive(Debug, Clone, PartialEq)]
pub struct QState {
    pub rho: CMatrix,
    pub dims: Vec<usize>,
    /// Per subsystem: (party index, slot index).
    pub routing: Vec<(usize, usize)>,
}

impl QState {
    pub fn new(rho: CMatrix, dims: Vec<usize>, routing: Vec<(usize, usize)>) -> Result<Self> {
        let d: usize = dims.iter().product();
        if !rho.is_square() || rho.rows != d {
            return Err(Error::Dimension(format!(
                "state is {}x{}, subsystem dims give {d}",
                rho.rows, rho.cols
            )));
        }
        if routing.len() != dims.len() {
            return Err(Error::Dimension("routing must list every subsystem".into()));
        }
        if !rho.is_hermitian(QTOL) {
            return Err(Error::Quantum("state is not Hermitian".into()));
        }
        if (rho.trace().re - 1.0).abs() > QTOL || rho.trace().im.abs() > QTOL {
            return Err(Error::Quantum(format!("state trace {} is not one", rho.trace())));
        }
        if !rho.is_psd(QTOL) {
            return Err(Error::Quantum("state is not positive semidefinite".into()));
        }
        Ok(QState { rho, dims, routing })
    }

    /// Two-qubit state, first qubit to `first`, second to `second`.
    pub fn qubit_pair(rho: CMatrix, first: (usize, usize), second: (usize, usize)) -> Result<Self> {
        Self::new(rho, vec![2, 2], vec![first, second])
    }

    pub fn pure(ket: &[C64], dims: Vec<usize>, routing: Vec<(usize, usize)>) -> Result<Self> {
        Self::new(CMatrix::projector(ket), dims, routing)
    }
}

/// Positive operator-valued measure.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    pub effects: Vec<CMatrix>,
    pub dim: usize,
}

impl Povm {
    pub fn new(effects: Vec<CMatrix>) -> Result<Self> {
        let dim = effects
            .first()
            .map(|e| e.rows)
            .ok_or_else(|| Error::Quantum("POVM without effects".into()))?;
        let mut total = CMatrix::zeros(dim, dim);
        for (k, e) in effects.iter().enumerate() {
            if e.rows != dim || e.cols != dim {
                return Err(Error::Dimension(format!("effect {k} has the wrong shape")));
            }
            if !e.is_psd(QTOL) {
                return Err(Error::Quantum(format!("effect {k} is not positive semidefinite")));
            }
            total = &total + e;
        }
        if total.max_abs_diff(&CMatrix::identity(dim)) > QTOL {
            return Err(Error::Quantum("effects do not sum to the identity".into()));
        }
        Ok(Povm { effects, dim })
    }

    /// Projective measurement onto an orthonormal basis.
    pub fn from_basis(basis: &[Vec<C64>]) -> Result<Self> {
        Self::new(basis.iter().map(|v| CMatrix::projector(v)).collect())
    }

    /// Computational basis measurement in dimension `d`.
    pub fn computational(d: usize) -> Self {
        let effects = (0..d)
            .map(|k| CMatrix::from_fn(d, d, |i, j| if i == k && j == k { ONE } else { ZERO }))
            .collect();
        Povm { effects, dim: d }
    }

    /// The single-outcome measurement `{I}`.
    pub fn trivial(d: usize) -> Self {
        Povm { effects: vec![CMatrix::identity(d)], dim: d }
    }

    pub fn outcomes(&self) -> usize {
        self.effects.len()
    }
}

/// Two-outcome POVM `{(I + O)/2, (I - O)/2}` of an involutory observable;
/// outcome 0 belongs to eigenvalue +1.
pub fn observable_to_povm(obs: &CMatrix) -> Result<Povm> {
    if !obs.is_square() || !obs.is_hermitian(QTOL) {
        return Err(Error::Quantum("observable must be a square Hermitian matrix".into()));
    }
    let d = obs.rows;
    let id = CMatrix::identity(d);
    if (obs * obs).max_abs_diff(&id) > QTOL {
        return Err(Error::Quantum("observable does not square to the identity".into()));
    }
    if obs.max_abs_diff(&id) <= QTOL || obs.max_abs_diff(&id.scale_re(-1.0)) <= QTOL {
        return Err(Error::Quantum("observable has a single eigenvalue".into()));
    }
    Povm::new(vec![(&id + obs).scale_re(0.5), (&id - obs).scale_re(0.5)])
}

/// Source states and per-party, per-input measurements on a network.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumStrategy {
    pub network: Network,
    pub states: Vec<QState>,
    pub measurements: Vec<Vec<Povm>>,
}

impl QuantumStrategy {
    pub fn new(network: Network, states: Vec<QState>, measurements: Vec<Vec<Povm>>) -> Result<Self> {
        let n = network.num_parties();
        if states.len() != network.sources.len() {
            return Err(Error::Dimension(format!(
                "{} states for {} sources",
                states.len(),
                network.sources.len()
            )));
        }
        if measurements.len() != n {
            return Err(Error::Dimension("one measurement list per party is required".into()));
        }
        // slot_dims[j][slot] filled from routing
        let mut slot_dims: Vec<Vec<Option<usize>>> =
            (0..n).map(|j| vec![None; network.party_sources(j).len()]).collect();
        for (s, st) in states.iter().enumerate() {
            let mut attached = network.source_parties(s);
            let mut routed: Vec<usize> = st.routing.iter().map(|r| r.0).collect();
            attached.sort_unstable();
            routed.sort_unstable();
            if attached != routed {
                return Err(Error::Dimension(format!(
                    "routing of source '{}' does not match its attached parties",
                    network.sources[s].id
                )));
            }
            for (&(j, slot), &dim) in st.routing.iter().zip(&st.dims) {
                let slots = &mut slot_dims[j];
                if slot >= slots.len() || slots[slot].is_some() {
                    return Err(Error::Dimension(format!(
                        "slot {slot} of party '{}' is out of range or used twice",
                        network.parties[j].id
                    )));
                }
                slots[slot] = Some(dim);
            }
        }
        for (j, povms) in measurements.iter().enumerate() {
            let p = &network.parties[j];
            let dim: usize = slot_dims[j].iter().map(|d| d.unwrap_or(1)).product();
            if povms.len() != p.inputs {
                return Err(Error::Dimension(format!(
                    "party '{}' has {} inputs but {} measurements",
                    p.id,
                    p.inputs,
                    povms.len()
                )));
            }
            for m in povms {
                if m.dim != dim {
                    return Err(Error::Dimension(format!(
                        "measurement of party '{}' acts on dimension {}, routed systems give {dim}",
                        p.id, m.dim
                    )));
                }
                if m.outcomes() != p.outputs {
                    return Err(Error::Dimension(format!(
                        "measurement of party '{}' has {} outcomes, party has {}",
                        p.id,
                        m.outcomes(),
                        p.outputs
                    )));
                }
            }
        }
        Ok(QuantumStrategy { network, states, measurements })
    }

    /// Same strategy with the state of source `s` replaced.
    pub fn with_state(&self, s: usize, rho: CMatrix) -> Result<Self> {
        let mut states = self.states.clone();
        let old = &states[s];
        states[s] = QState::new(rho, old.dims.clone(), old.routing.clone())?;
        QuantumStrategy::new(self.network.clone(), states, self.measurements.clone())
    }
}

/// Network Born rule `p(a|x) = Tr[(A_{a1|x1} (x) ... ) (rho_1 (x) ... )]` with
/// the source subsystems reordered into party-slot order.
pub fn born(strat: &QuantumStrategy) -> Result<Distribution> {
    let net = &strat.network;
    let n = net.num_parties();
    let mut slot_dims: Vec<Vec<usize>> =
        (0..n).map(|j| vec![1; net.party_sources(j).len()]).collect();
    for st in &strat.states {
        for (&(j, slot), &d) in st.routing.iter().zip(&st.dims) {
            slot_dims[j][slot] = d;
        }
    }
    let mut offsets = Vec::with_capacity(n);
    let mut gdims = Vec::new();
    for sd in &slot_dims {
        offsets.push(gdims.len());
        gdims.extend_from_slice(sd);
    }
    let total: usize = gdims.iter().product();
    if total > 1 << 12 {
        return Err(Error::Dimension(format!("joint dimension {total} exceeds the dense limit 4096")));
    }
    let positions: Vec<Vec<usize>> = strat
        .states
        .iter()
        .map(|st| st.routing.iter().map(|&(j, slot)| offsets[j] + slot).collect())
        .collect();
    let local: Vec<Vec<usize>> = strat
        .states
        .iter()
        .zip(&positions)
        .map(|(st, pos)| {
            (0..total)
                .map(|g| {
                    let digits = decode(g, &gdims);
                    let sub: Vec<usize> = pos.iter().map(|&p| digits[p]).collect();
                    encode(&sub, &st.dims)
                })
                .collect()
        })
        .collect();
    let joint = CMatrix::from_fn(total, total, |i, j| {
        let mut v = ONE;
        for (st, loc) in strat.states.iter().zip(&local) {
            v *= st.rho.get(loc[i], loc[j]);
            if v == ZERO {
                break;
            }
        }
        v
    });
    let party_dims: Vec<usize> = slot_dims.iter().map(|sd| sd.iter().product()).collect();
    let scenario = net.scenario();
    let mut probs = vec![0.0; scenario.size()];
    let mut xs = vec![0; n];
    let mut as_ = vec![0; n];
    contract(strat, &party_dims, n, joint, &mut xs, &mut as_, &mut probs, &scenario);
    Distribution::from_computed(scenario, probs)
}

#[allow(clippy::too_many_arguments)]
fn contract(
    strat: &QuantumStrategy,
    party_dims: &[usize],
    level: usize,
    rho: CMatrix,
    xs: &mut Vec<usize>,
    as_: &mut Vec<usize>,
    probs: &mut [f64],
    scenario: &crate::model::Scenario,
) {
    if level == 0 {
        let no = scenario.num_outputs();
        let idx = encode(xs, &scenario.inputs()) * no + encode(as_, &scenario.outputs());
        probs[idx] = rho.get(0, 0).re;
        return;
    }
    let j = level - 1;
    let d = party_dims[j];
    let rest = rho.rows / d;
    for (x, povm) in strat.measurements[j].iter().enumerate() {
        for (a, e) in povm.effects.iter().enumerate() {
            let mut out = CMatrix::zeros(rest, rest);
            for r in 0..rest {
                for s in 0..rest {
                    let mut acc = ZERO;
                    for k in 0..d {
                        for l in 0..d {
                            let ekl = e.get(k, l);
                            if ekl != ZERO {
                                acc += ekl * rho.get(r * d + l, s * d + k);
                            }
                        }
                    }
                    out.set(r, s, acc);
                }
            }
            xs[j] = x;
            as_[j] = a;
            contract(strat, party_dims, j, out, xs, as_, probs, scenario);
        }
    }
}

/// Random density matrix `G G^dag / Tr` with complex Gaussian-like `G`.
pub fn random_state<R: Rng>(d: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(d, d, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let p = &g * &g.adjoint();
    let t = p.trace().re;
    p.scale_re(1.0 / t)
}

/// Random orthonormal basis by Gram-Schmidt on random vectors.
pub fn random_basis<R: Rng>(d: usize, rng: &mut R) -> Vec<Vec<C64>> {
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(d);
    while basis.len() < d {
        let mut v: Vec<C64> = (0..d).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        for b in &basis {
            let ov: C64 = b.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= ov * bi;
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-6 {
            basis.push(v.into_iter().map(|z| z / norm).collect());
        }
    }
    basis
}

/// Random POVM with `outcomes` effects: a mixture of two projective
/// measurements whose basis vectors are dealt out to random outcomes.
pub fn random_povm<R: Rng>(d: usize, outcomes: usize, rng: &mut R) -> Povm {
    let w: f64 = rng.gen_range(0.0..1.0);
    let mut effects = vec![CMatrix::zeros(d, d); outcomes];
    for weight in [w, 1.0 - w] {
        for v in random_basis(d, rng) {
            let k = rng.gen_range(0..outcomes);
            effects[k] = &effects[k] + &CMatrix::projector(&v).scale_re(weight);
        }
    }
    Povm { effects, dim: d }
}

/// Random strategy on `net`: random mixed states of qubits (or `dim`-level
/// systems) on every source and random POVMs everywhere.
pub fn random_strategy<R: Rng>(net: &Network, dim: usize, rng: &mut R) -> Result<QuantumStrategy> {
    let n = net.num_parties();
    let mut states = Vec::new();
    for s in 0..net.sources.len() {
        let parties = net.source_parties(s);
        let routing: Vec<(usize, usize)> = parties
            .iter()
            .map(|&j| (j, net.party_sources(j).iter().position(|&t| t == s).unwrap()))
            .collect();
        let dims = vec![dim; parties.len()];
        let d: usize = dims.iter().product();
        states.push(QState { rho: random_state(d, rng), dims, routing });
    }
    let measurements = (0..n)
        .map(|j| {
            let d = dim.pow(net.party_sources(j).len() as u32);
            let p = &net.parties[j];
            (0..p.inputs).map(|_| random_povm(d, p.outputs, rng)).collect()
        })
        .collect();
    QuantumStrategy::new(net.clone(), states, measurements)
}

/// Default routing: subsystem `k` of a source goes to its `k`-th attached
/// party, into the slot given by the source's rank among that party's sources.
pub fn default_routing(net: &Network, s: usize) -> Vec<(usize, usize)> {
    net.source_parties(s)
        .into_iter()
        .map(|j| (j, net.party_sources(j).iter().position(|&t| t == s).unwrap()))
        .collect()
}

/// Textual description of a strategy: named states and measurements or
/// explicit matrices, entries given as `[re, im]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyConfig {
    pub network: Network,
    pub states: Vec<StateConfig>,
    /// Per party id, one measurement per input.
    pub measurements: std::collections::BTreeMap<String, Vec<MeasurementConfig>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateConfig {
    pub source: String,
    /// `phi+`, `phi-`, `psi+`, `psi-`, `isotropic`, `werner`, `ghz` or `matrix`.
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<[f64; 2]>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dims: Option<Vec<usize>>,
    /// Per subsystem `[party id, slot]`; defaults to [`default_routing`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub routing: Option<Vec<(String, usize)>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MeasurementConfig {
    /// `bsm`, `ejm`, `pauli:x|y|z`, `-pauli:x|y|z`, `obs:x+z`, `obs:x-z`,
    /// `comp`, `star`, `trivial`.
    Named(String),
    Effects { effects: Vec<Vec<Vec<[f64; 2]>>> },
}

fn parse_matrix(rows: &[Vec<[f64; 2]>]) -> CMatrix {
    let conv: Vec<Vec<C64>> = rows.iter().map(|r| r.iter().map(|e| c(e[0], e[1])).collect()).collect();
    CMatrix::from_rows(&conv)
}

/// Named measurement on a system of dimension `dim`.
pub fn named_measurement(name: &str, dim: usize) -> Result<Povm> {
    let qubits = dim.trailing_zeros() as usize;
    let pauli_of = |axis: &str| -> Result<CMatrix> {
        match axis {
            "x" => Ok(pauli(1)),
            "y" => Ok(pauli(2)),
            "z" => Ok(pauli(3)),
            _ => Err(Error::UnknownName(format!("pauli:{axis}"))),
        }
    };
    let povm = match name {
        "bsm" => Povm::from_basis(&bell_basis())?,
        "ejm" => Povm::from_basis(&ejm_basis())?,
        "comp" => Povm::computational(dim),
        "trivial" => Povm::trivial(dim),
        "star" => {
            if !dim.is_power_of_two() || dim < 4 {
                return Err(Error::Dimension(format!("star basis needs at least two qubits, got dim {dim}")));
            }
            Povm::new(star_basis_effects(qubits))?
        }
        "obs:x+z" => observable_to_povm(&diagonal_observable(1.0))?,
        "obs:x-z" => observable_to_povm(&diagonal_observable(-1.0))?,
        other => {
            if let Some(axis) = other.strip_prefix("-pauli:") {
                observable_to_povm(&pauli_of(axis)?.scale_re(-1.0))?
            } else if let Some(axis) = other.strip_prefix("pauli:") {
                observable_to_povm(&pauli_of(axis)?)?
            } else {
                return Err(Error::UnknownName(other.to_string()));
            }
        }
    };
    if povm.dim != dim {
        return Err(Error::Dimension(format!(
            "measurement '{name}' acts on dimension {}, party holds {dim}",
            povm.dim
        )));
    }
    Ok(povm)
}

impl StrategyConfig {
    pub fn build(&self) -> Result<QuantumStrategy> {
        let net = &self.network;
        crate::model::validate_network(net).map_err(|e| Error::InvalidNetwork(e.join("; ")))?;
        let mut states = vec![None; net.sources.len()];
        for sc in &self.states {
            let s = net
                .source_index(&sc.source)
                .ok_or_else(|| Error::UnknownName(sc.source.clone()))?;
            let k = net.source_parties(s).len();
            let routing = match &sc.routing {
                Some(r) => r
                    .iter()
                    .map(|(id, slot)| {
                        net.party_index(id).map(|j| (j, *slot)).ok_or_else(|| Error::UnknownName(id.clone()))
                    })
                    .collect::<Result<Vec<_>>>()?,
                None => default_routing(net, s),
            };
            let qubit_pair = || -> Result<()> {
                if k != 2 {
                    return Err(Error::Dimension(format!(
                        "state '{}' needs a two-party source, '{}' has {k}",
                        sc.kind, sc.source
                    )));
                }
                Ok(())
            };
            let v = || sc.v.ok_or_else(|| Error::InvalidArgument(format!("state '{}' needs v", sc.kind)));
            let (rho, dims) = match sc.kind.as_str() {
                "phi+" => (qubit_pair().map(|_| CMatrix::projector(&phi_plus()))?, vec![2, 2]),
                "phi-" => (qubit_pair().map(|_| CMatrix::projector(&phi_minus()))?, vec![2, 2]),
                "psi+" => (qubit_pair().map(|_| CMatrix::projector(&psi_plus()))?, vec![2, 2]),
                "psi-" => (qubit_pair().map(|_| CMatrix::projector(&psi_minus()))?, vec![2, 2]),
                "isotropic" => {
                    qubit_pair()?;
                    (isotropic_state(v()?)?, vec![2, 2])
                }
                "werner" => {
                    qubit_pair()?;
                    (werner_state(v()?)?, vec![2, 2])
                }
                "ghz" => (CMatrix::projector(&ghz_ket(k)), vec![2; k]),
                "matrix" => {
                    let m = sc
                        .matrix
                        .as_ref()
                        .ok_or_else(|| Error::InvalidArgument("matrix state needs 'matrix'".into()))?;
                    let dims = sc.dims.clone().unwrap_or_else(|| vec![2; k]);
                    (parse_matrix(m), dims)
                }
                other => return Err(Error::UnknownName(other.to_string())),
            };
            states[s] = Some(QState::new(rho, dims, routing)?);
        }
        let states = states
            .into_iter()
            .enumerate()
            .map(|(s, st)| st.ok_or_else(|| Error::InvalidArgument(format!("no state for source '{}'", net.sources[s].id))))
            .collect::<Result<Vec<_>>>()?;
        let mut slot_dims: Vec<Vec<usize>> = (0..net.num_parties())
            .map(|j| vec![1; net.party_sources(j).len()])
            .collect();
        for st in &states {
            for (&(j, slot), &d) in st.routing.iter().zip(&st.dims) {
                if slot < slot_dims[j].len() {
                    slot_dims[j][slot] = d;
                }
            }
        }
        let mut measurements = Vec::new();
        for (j, p) in net.parties.iter().enumerate() {
            let dim: usize = slot_dims[j].iter().product();
            let list = self
                .measurements
                .get(&p.id)
                .ok_or_else(|| Error::InvalidArgument(format!("no measurements for party '{}'", p.id)))?;
            let povms = list
                .iter()
                .map(|m| match m {
                    MeasurementConfig::Named(name) => named_measurement(name, dim),
                    MeasurementConfig::Effects { effects } => {
                        Povm::new(effects.iter().map(|e| parse_matrix(e)).collect())
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            measurements.push(povms);
        }
        QuantumStrategy::new(net.clone(), states, measurements)
    }
}

/// Preset strategies used throughout the toolkit and the CLI.
pub mod presets {
    use super::*;

    fn obs_povms(obs: &[CMatrix]) -> Result<Vec<Povm>> {
        obs.iter().map(observable_to_povm).collect()
    }

    /// Maximally entangled pair with `A = (X, Z)` and `B = ((X+Z)/sqrt2, (X-Z)/sqrt2)`,
    /// isotropic noise of visibility `v`.
    pub fn chsh(v: f64) -> Result<QuantumStrategy> {
        let net = Network::bell(2, 2, 2);
        let st = QState::qubit_pair(isotropic_state(v)?, (0, 0), (1, 0))?;
        let a = obs_povms(&[pauli(1), pauli(3)])?;
        let b = obs_povms(&[diagonal_observable(1.0), diagonal_observable(-1.0)])?;
        QuantumStrategy::new(net, vec![st], vec![a, b])
    }

    /// Bilocal entanglement swapping: isotropic pairs, Bell state measurement
    /// in the middle, `(X +- Z)/sqrt2` at both ends.
    pub fn bilocal_bsm(v: f64) -> Result<QuantumStrategy> {
        let net = Network::bilocal((2, 2), (1, 4), (2, 2));
        let ab = QState::qubit_pair(isotropic_state(v)?, (0, 0), (1, 0))?;
        let bc = QState::qubit_pair(isotropic_state(v)?, (1, 1), (2, 0))?;
        let ends = obs_povms(&[diagonal_observable(1.0), diagonal_observable(-1.0)])?;
        let bob = vec![Povm::from_basis(&bell_basis())?];
        QuantumStrategy::new(net, vec![ab, bc], vec![ends.clone(), bob, ends])
    }

    /// Bilocal elegant-measurement protocol: Werner pairs, the elegant joint
    /// measurement in the middle (the half shared with A enters the second
    /// slot), Pauli X, Y, Z at both ends.
    pub fn bilocal_ejm(v: f64) -> Result<QuantumStrategy> {
        let net = Network::bilocal((3, 2), (1, 4), (3, 2));
        let ab = QState::qubit_pair(werner_state(v)?, (0, 0), (1, 1))?;
        let bc = QState::qubit_pair(werner_state(v)?, (1, 0), (2, 0))?;
        let ends = obs_povms(&[pauli(1), pauli(2), pauli(3)])?;
        let bob = vec![Povm::from_basis(&ejm_basis())?];
        QuantumStrategy::new(net, vec![ab, bc], vec![ends.clone(), bob, ends])
    }

    /// Star with `m` isotropic pairs, branches `(X +- Z)/sqrt2`, center in
    /// the joint eigenbasis of [`star_generators`].
    pub fn star(m: usize, v: f64) -> Result<QuantumStrategy> {
        if m < 2 {
            return Err(Error::InvalidArgument("star needs at least two branches".into()));
        }
        let net = Network::star(m, 2, 2, 1 << m);
        let mut states = Vec::new();
        for k in 0..m {
            let branch = if k == 0 { 0 } else { k + 1 };
            states.push(QState::qubit_pair(isotropic_state(v)?, (branch, 0), (1, k))?);
        }
        let ends = obs_povms(&[diagonal_observable(1.0), diagonal_observable(-1.0)])?;
        let mut meas = vec![ends.clone(), vec![Povm::new(star_basis_effects(m))?]];
        for _ in 2..=m {
            meas.push(ends.clone());
        }
        QuantumStrategy::new(net, states, meas)
    }

    /// Triangle with the same two-qubit state on every source and the same
    /// two-qubit measurement at every party. Each source's first qubit goes
    /// to the second slot of its first party, the second qubit to the first
    /// slot of its second party.
    pub fn triangle_uniform(rho: CMatrix, basis: &[Vec<C64>]) -> Result<QuantumStrategy> {
        let net = Network::triangle(basis.len());
        // alpha (B,C), beta (C,A), gamma (A,B)
        let st = |first: usize, second: usize| QState::qubit_pair(rho.clone(), (first, 1), (second, 0));
        let states = vec![st(1, 2)?, st(2, 0)?, st(0, 1)?];
        let povm = Povm::from_basis(basis)?;
        QuantumStrategy::new(net, states, vec![vec![povm.clone()], vec![povm.clone()], vec![povm]])
    }

    /// Singlets and the elegant joint measurement at every party.
    pub fn triangle_elegant(v: f64) -> Result<QuantumStrategy> {
        triangle_uniform(werner_state(v)?, &ejm_basis())
    }

    /// `|phi+>` pairs and Bell state measurements at every party.
    pub fn triangle_bsm() -> Result<QuantumStrategy> {
        triangle_uniform(CMatrix::projector(&phi_plus()), &bell_basis())
    }

    /// Three-qubit GHZ state with `A_0 = Y`, `A_1 = -X` for every party.
    pub fn mermin_ghz() -> Result<QuantumStrategy> {
        let net = Network::bell(3, 2, 2);
        let st = QState::pure(&ghz_ket(3), vec![2, 2, 2], vec![(0, 0), (1, 0), (2, 0)])?;
        let m = obs_povms(&[pauli(2), pauli(1).scale_re(-1.0)])?;
        QuantumStrategy::new(net, vec![st], vec![m.clone(), m.clone(), m])
    }

    /// Preset lookup by CLI name; `v` is the per-source visibility.
    pub fn by_name(name: &str, v: f64) -> Result<QuantumStrategy> {
        match name {
            "chsh" | "chsh-default" => chsh(v),
            "bsm" | "bsm-default" | "brgp" => bilocal_bsm(v),
            "ejm" | "ejm-default" | "tgb" => bilocal_ejm(v),
            "elegant" | "elegant-triangle" => triangle_elegant(v),
            "bsm-triangle" => triangle_bsm(),
            "mermin-ghz" => mermin_ghz(),
            other => {
                if let Some(m) = other.strip_prefix("star:") {
                    let m: usize = m.parse().map_err(|_| Error::Parse(format!("bad star size '{m}'")))?;
                    star(m, v)
                } else {
                    Err(Error::UnknownName(other.to_string()))
                }
            }
        }
    }

    pub const NAMES: &[&str] =
        &["chsh", "bsm-default", "ejm-default", "star:<m>", "elegant", "bsm-triangle", "mermin-ghz"];
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{correlator, no_signaling_check};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn bell_basis_matches_printed_vectors() {
        let b = bell_basis();
        let h = FRAC_1_SQRT_2;
        assert_eq!(b[0], vec![c(h, 0.0), ZERO, ZERO, c(h, 0.0)]);
        let ov: C64 = b[1].iter().zip(&b[2]).map(|(x, y)| x.conj() * y).sum();
        assert!(ov.norm() < 1e-15);
        let sum = b.iter().fold(CMatrix::zeros(4, 4), |acc, v| &acc + &CMatrix::projector(v));
        assert!(sum.max_abs_diff(&CMatrix::identity(4)) < 1e-15);
    }

    #[test]
    fn bsm_parities_are_xx_and_zz() {
        let b = bell_basis();
        let xx = pauli(1).kron(&pauli(1));
        let zz = pauli(3).kron(&pauli(3));
        let mut sx = CMatrix::zeros(4, 4);
        let mut sz = CMatrix::zeros(4, 4);
        for (k, v) in b.iter().enumerate() {
            let (b0, b1) = (k >> 1, k & 1);
            let p = CMatrix::projector(v);
            sx = &sx + &p.scale_re(if b0 == 0 { 1.0 } else { -1.0 });
            sz = &sz + &p.scale_re(if b1 == 0 { 1.0 } else { -1.0 });
        }
        assert!(sx.max_abs_diff(&xx) < 1e-15);
        assert!(sz.max_abs_diff(&zz) < 1e-15);
    }

    #[test]
    fn ejm_first_vector_and_gram() {
        let e = ejm_basis();
        let s = 1.0 / 8f64.sqrt();
        let want = [c(-s, -s), ZERO, c(0.0, -2.0 * s), c(-s, s)];
        for (got, w) in e[0].iter().zip(want) {
            assert!((got - w).norm() < 1e-15);
        }
        for i in 0..4 {
            for j in 0..4 {
                let ov: C64 = e[i].iter().zip(&e[j]).map(|(x, y)| x.conj() * y).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((ov - c(want, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn chsh_strategy_correlators() {
        let d = born(&presets::chsh(1.0).unwrap()).unwrap();
        for x in 0..2 {
            for y in 0..2 {
                let want = if x * y == 1 { -FRAC_1_SQRT_2 } else { FRAC_1_SQRT_2 };
                assert!(close(correlator(&d, &[0, 1], &[x, y]).unwrap(), want, 1e-12));
            }
        }
        assert!(no_signaling_check(&d, 1e-10).passed);
    }

    #[test]
    fn trivial_povm_gives_point_mass() {
        let net = Network {
            parties: vec![crate::model::Party { id: "A".into(), inputs: 1, outputs: 2 }],
            sources: vec![crate::model::Source { id: "S".into(), parties: vec!["A".into()] }],
        };
        let st = QState::new(CMatrix::identity(2).scale_re(0.5), vec![2], vec![(0, 0)]).unwrap();
        let povm = Povm { effects: vec![CMatrix::identity(2), CMatrix::zeros(2, 2)], dim: 2 };
        let strat = QuantumStrategy::new(net, vec![st], vec![vec![povm]]).unwrap();
        let d = born(&strat).unwrap();
        assert_eq!(d.probs, vec![1.0, 0.0]);
    }

    #[test]
    fn observable_conversion() {
        let p = observable_to_povm(&pauli(3)).unwrap();
        assert_eq!(p.effects[0], CMatrix::from_real(&[&[1.0, 0.0], &[0.0, 0.0]]));
        assert_eq!(p.effects[1], CMatrix::from_real(&[&[0.0, 0.0], &[0.0, 1.0]]));
        let q = observable_to_povm(&diagonal_observable(1.0)).unwrap();
        let obs = &q.effects[0] - &q.effects[1];
        assert!(obs.max_abs_diff(&diagonal_observable(1.0)) < 1e-15);
        assert!(observable_to_povm(&CMatrix::identity(2)).is_err());
        assert!(observable_to_povm(&CMatrix::from_real(&[&[1.0, 0.0], &[0.0, 0.5]])).is_err());
    }

    #[test]
    fn noisy_states_at_extremes() {
        assert!(isotropic_state(1.0).unwrap().max_abs_diff(&CMatrix::projector(&phi_plus())) < 1e-15);
        assert!(isotropic_state(0.0).unwrap().max_abs_diff(&CMatrix::identity(4).scale_re(0.25)) < 1e-15);
        assert!(werner_state(1.0).unwrap().max_abs_diff(&CMatrix::projector(&psi_minus())) < 1e-15);
        assert!(isotropic_state(1.5).is_err());
        assert!(werner_state(-0.1).is_err());
    }

    #[test]
    fn star_generators_commute_and_decompose_observables() {
        for m in 2..=4 {
            let gens = star_generators(m);
            for g in &gens {
                for h in &gens {
                    assert_eq!(g.mul(h).sites, h.mul(g).sites);
                    assert_eq!(g.mul(h).phase, h.mul(g).phase);
                }
            }
            for mask in 0usize..(1 << m) {
                let subset: Vec<usize> = (0..m).filter(|k| mask >> k & 1 == 1).collect();
                let dec = star_decomposition(m, &star_observable(m, &subset));
                assert_eq!(dec.is_some(), subset.len() % 2 == 0, "m={m} subset={subset:?}");
            }
        }
    }

    #[test]
    fn star_basis_is_complete() {
        let eff = star_basis_effects(3);
        let total = eff.iter().fold(CMatrix::zeros(8, 8), |acc, e| &acc + e);
        assert!(total.max_abs_diff(&CMatrix::identity(8)) < 1e-12);
        for e in &eff {
            assert!(close(e.trace().re, 1.0, 1e-12));
        }
    }

    #[test]
    fn strategy_validation_catches_mismatches() {
        let good = presets::bilocal_bsm(1.0).unwrap();
        let mut bad = good.measurements.clone();
        bad[1] = vec![Povm::computational(2)];
        assert!(QuantumStrategy::new(good.network.clone(), good.states.clone(), bad).is_err());
        let mut states = good.states.clone();
        states[0].routing = vec![(0, 0), (2, 1)];
        assert!(QuantumStrategy::new(good.network.clone(), states, good.measurements.clone()).is_err());
    }

    #[test]
    fn config_builds_bilocal_bsm() {
        let json = r#"{
            "network": {"parties": [{"id":"A","inputs":2,"outputs":2},{"id":"B","inputs":1,"outputs":4},{"id":"C","inputs":2,"outputs":2}],
                        "sources": [{"id":"AB","parties":["A","B"]},{"id":"BC","parties":["B","C"]}]},
            "states": [{"source":"AB","kind":"phi+"},{"source":"BC","kind":"isotropic","v":1.0}],
            "measurements": {"A":["obs:x+z","obs:x-z"],"B":["bsm"],"C":["obs:x+z","obs:x-z"]}
        }"#;
        let cfg: StrategyConfig = serde_json::from_str(json).unwrap();
        let d = born(&cfg.build().unwrap()).unwrap();
        let want = born(&presets::bilocal_bsm(1.0).unwrap()).unwrap();
        assert!(d.tv_distance(&want) < 1e-12);
    }
}
