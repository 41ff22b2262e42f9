//! Covariance of embedded outcomes and its decomposition into per-source
//! positive-semidefinite blocks.

use crate::error::{Error, Result};
use crate::linalg::{project_psd, RMatrix};
use crate::model::{decode, Distribution, Network};

/// Per party, one real vector per outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub vectors: Vec<Vec<Vec<f64>>>,
}

impl Embedding {
    pub fn new(vectors: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        for (j, party) in vectors.iter().enumerate() {
            let dim = party.first().map_or(0, |v| v.len());
            if dim == 0 || party.iter().any(|v| v.len() != dim) {
                return Err(Error::Dimension(format!("party {j} needs vectors of one positive dimension")));
            }
            if party.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(format!("party {j} has a non-finite embedding")));
            }
        }
        let nonconstant = vectors.iter().any(|party| party.iter().any(|v| v != &party[0]));
        if !nonconstant {
            return Err(Error::InvalidArgument("every embedding is constant".into()));
        }
        Ok(Embedding { vectors })
    }

    /// Indicator vector per outcome.
    pub fn one_hot(outputs: &[usize]) -> Self {
        let vectors = outputs
            .iter()
            .map(|&o| (0..o).map(|a| (0..o).map(|k| if k == a { 1.0 } else { 0.0 }).collect()).collect())
            .collect();
        Embedding { vectors }
    }

    /// `a -> (-1)^a` for binary outputs.
    pub fn pm1(outputs: &[usize]) -> Result<Self> {
        if outputs.iter().any(|&o| o != 2) {
            return Err(Error::InvalidArgument("the +-1 embedding needs binary outputs".into()));
        }
        Ok(Embedding { vectors: outputs.iter().map(|_| vec![vec![1.0], vec![-1.0]]).collect() })
    }

    pub fn dims(&self) -> Vec<usize> {
        self.vectors.iter().map(|p| p[0].len()).collect()
    }

    /// Party owning each coordinate.
    pub fn coordinate_parties(&self) -> Vec<usize> {
        self.dims().iter().enumerate().flat_map(|(j, &d)| std::iter::repeat(j).take(d)).collect()
    }
}

/// `Cov = <v v^T> - <v><v>^T` of the concatenated embedded outputs.
pub fn covariance(d: &Distribution, e: &Embedding) -> Result<RMatrix> {
    if d.scenario.has_inputs() {
        return Err(Error::Scenario("covariance needs a no-input distribution".into()));
    }
    let outs = d.scenario.outputs();
    if e.vectors.len() != outs.len() || e.vectors.iter().zip(&outs).any(|(v, &o)| v.len() != o) {
        return Err(Error::Dimension("embedding does not match the scenario".into()));
    }
    let n: usize = e.dims().iter().sum();
    let mut mean = vec![0.0; n];
    let mut second = RMatrix::zeros(n, n);
    for (i, &p) in d.probs.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let a = decode(i, &outs);
        let v: Vec<f64> = a.iter().enumerate().flat_map(|(j, &aj)| e.vectors[j][aj].iter().copied()).collect();
        for r in 0..n {
            mean[r] += p * v[r];
            for c in 0..n {
                second.set(r, c, second.get(r, c) + p * v[r] * v[c]);
            }
        }
    }
    let mut cov = RMatrix::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            cov.set(r, c, second.get(r, c) - mean[r] * mean[c]);
        }
    }
    Ok(cov)
}

/// Which model classes the decomposition constrains on this network.
pub fn regime(net: &Network) -> &'static str {
    let np = net.num_parties();
    let at_most_one = (0..np).all(|j| (j + 1..np).all(|k| net.common_sources(j, k).len() <= 1));
    if at_most_one {
        "necessary for local and quantum models, and theory-independent on this network (pairs share at most one source)"
    } else {
        "necessary for local and quantum models"
    }
}

#[derive(Debug, Clone)]
pub struct BlockDecomposition {
    /// One full-size matrix per source, zero outside its support.
    pub blocks: Vec<RMatrix>,
    pub residual: f64,
    pub feasible: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct DykstraOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for DykstraOptions {
    fn default() -> Self {
        DykstraOptions { tol: 1e-8, max_iter: 50_000 }
    }
}

struct Supports {
    /// Coordinates of each source.
    coords: Vec<Vec<usize>>,
    /// Sources covering each entry.
    cover: Vec<Vec<Vec<usize>>>,
}

fn supports(net: &Network, coord_party: &[usize]) -> Supports {
    let n = coord_party.len();
    let coords: Vec<Vec<usize>> = (0..net.sources.len())
        .map(|s| {
            let ps = net.source_parties(s);
            (0..n).filter(|&r| ps.contains(&coord_party[r])).collect()
        })
        .collect();
    let cover = (0..n)
        .map(|r| (0..n).map(|c| (0..coords.len()).filter(|&s| coords[s].contains(&r) && coords[s].contains(&c)).collect()).collect())
        .collect();
    Supports { coords, cover }
}

fn project_blocks(src: &[RMatrix], sup: &Supports, out: &mut [RMatrix]) {
    for ((b, idx), o) in src.iter().zip(&sup.coords).zip(out.iter_mut()) {
        let k = idx.len();
        let mut sub = RMatrix::zeros(k, k);
        for (a, &r) in idx.iter().enumerate() {
            for (c, &s) in idx.iter().enumerate() {
                sub.set(a, c, b.get(r, s));
            }
        }
        let p = project_psd(&sub);
        o.data.iter_mut().for_each(|v| *v = 0.0);
        for (a, &r) in idx.iter().enumerate() {
            for (c, &s) in idx.iter().enumerate() {
                o.set(r, s, p.get(a, c));
            }
        }
    }
}

fn project_affine(src: &[RMatrix], cov: &RMatrix, sup: &Supports, out: &mut [RMatrix]) {
    let n = cov.n_rows;
    for r in 0..n {
        for c in 0..n {
            let cover = &sup.cover[r][c];
            let mut sum = 0.0;
            for (s, o) in out.iter_mut().enumerate() {
                let v = if cover.contains(&s) { src[s].get(r, c) } else { 0.0 };
                o.set(r, c, v);
                sum += v;
            }
            if cover.is_empty() {
                continue;
            }
            let delta = (cov.get(r, c) - sum) / cover.len() as f64;
            for &s in cover {
                let v = out[s].get(r, c) + delta;
                out[s].set(r, c, v);
            }
        }
    }
}

fn residual(blocks: &[RMatrix], cov: &RMatrix) -> f64 {
    let mut total = 0.0;
    for (k, &target) in cov.data.iter().enumerate() {
        let s: f64 = blocks.iter().map(|b| b.data[k]).sum();
        total += (s - target) * (s - target);
    }
    total.sqrt()
}

fn add_into(a: &[RMatrix], b: &[RMatrix], out: &mut [RMatrix]) {
    for ((x, y), o) in a.iter().zip(b).zip(out.iter_mut()) {
        for ((u, v), w) in x.data.iter().zip(&y.data).zip(o.data.iter_mut()) {
            *w = u + v;
        }
    }
}

fn sub_into(a: &[RMatrix], b: &[RMatrix], out: &mut [RMatrix]) {
    for ((x, y), o) in a.iter().zip(b).zip(out.iter_mut()) {
        for ((u, v), w) in x.data.iter().zip(&y.data).zip(o.data.iter_mut()) {
            *w = u - v;
        }
    }
}

/// Dykstra's alternating projections between the per-source PSD cones
/// (restricted to each source's coordinates) and the affine set
/// `sum_i C_i = cov`. A residual that stays above `tol` is evidence, not a
/// proof, that no decomposition exists.
pub fn decompose(cov: &RMatrix, net: &Network, coord_party: &[usize], opts: DykstraOptions) -> Result<BlockDecomposition> {
    if !cov.is_symmetric(1e-9) {
        return Err(Error::InvalidArgument("covariance matrix is not symmetric".into()));
    }
    if coord_party.len() != cov.n_rows || coord_party.iter().any(|&j| j >= net.num_parties()) {
        return Err(Error::Dimension("coordinate-to-party map does not match the matrix".into()));
    }
    let sup = supports(net, coord_party);
    let ns = net.sources.len();
    let n = cov.n_rows;
    let zero = vec![RMatrix::zeros(n, n); ns];
    // start from an even split of the target over covering sources
    let mut x = zero.clone();
    project_affine(&zero, cov, &sup, &mut x);
    let mut p = zero.clone();
    let mut q = zero.clone();
    let mut y = zero.clone();
    let mut tmp = zero;
    project_blocks(&x, &sup, &mut y);
    let mut res = residual(&y, cov);
    let mut it = 0;
    while it < opts.max_iter && res >= opts.tol {
        add_into(&x, &p, &mut tmp);
        project_blocks(&tmp, &sup, &mut y);
        sub_into(&tmp, &y, &mut p);
        add_into(&y, &q, &mut tmp);
        project_affine(&tmp, cov, &sup, &mut x);
        sub_into(&tmp, &x, &mut q);
        res = residual(&y, cov);
        it += 1;
    }
    Ok(BlockDecomposition { blocks: y, residual: res, feasible: res < opts.tol, iterations: it })
}

/// Covariance of `d` under `e` followed by [`decompose`].
pub fn test_distribution(d: &Distribution, net: &Network, e: &Embedding, opts: DykstraOptions) -> Result<BlockDecomposition> {
    if d.scenario != net.scenario() {
        return Err(Error::Scenario("distribution does not match the network scenario".into()));
    }
    let cov = covariance(d, e)?;
    decompose(&cov, net, &e.coordinate_parties(), opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo;

    #[test]
    fn ghz_pm1_covariance_is_all_ones() {
        let c = covariance(&zoo::ghz(), &Embedding::pm1(&[2, 2, 2]).unwrap()).unwrap();
        for r in 0..3 {
            for s in 0..3 {
                assert!((c.get(r, s) - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn w_pm1_covariance() {
        let c = covariance(&zoo::w(), &Embedding::pm1(&[2, 2, 2]).unwrap()).unwrap();
        assert!((c.get(0, 0) - 8.0 / 9.0).abs() < 1e-12);
        assert!((c.get(0, 1) + 4.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn independent_bits_decompose() {
        let net = Network::triangle(2);
        let e = Embedding::pm1(&[2, 2, 2]).unwrap();
        let r = test_distribution(&zoo::uniform(&[2, 2, 2]), &net, &e, DykstraOptions::default()).unwrap();
        assert!(r.feasible, "residual {}", r.residual);
    }

    #[test]
    fn ghz_leaves_a_gap() {
        let net = Network::triangle(2);
        let e = Embedding::pm1(&[2, 2, 2]).unwrap();
        let opts = DykstraOptions { tol: 1e-8, max_iter: 2000 };
        let r = test_distribution(&zoo::ghz(), &net, &e, opts).unwrap();
        assert!(r.residual > 1e-3);
    }

    #[test]
    fn constant_embedding_rejected() {
        assert!(Embedding::new(vec![vec![vec![1.0], vec![1.0]]]).is_err());
    }
}
