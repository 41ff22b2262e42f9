//! Boundary scans over one-parameter and two-parameter distribution
//! families: grid evaluation and bisection of a violation predicate.

use crate::covariance::{self, DykstraOptions, Embedding};
use crate::entropic;
use crate::error::{Error, Result};
use crate::inequalities::{self, BOUND_TOL};
use crate::model::Network;
use crate::zoo;

/// Tests that certify a point of the `p_pq` family as incompatible with
/// the triangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TriangleTest {
    NoSignaling,
    Finner,
    Entropy,
    Covariance,
}

impl std::str::FromStr for TriangleTest {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ns-triangle" | "ns" => Ok(TriangleTest::NoSignaling),
            "finner-triangle" | "finner" => Ok(TriangleTest::Finner),
            "triangle-entropy" | "entropy" => Ok(TriangleTest::Entropy),
            "covariance" | "cov" => Ok(TriangleTest::Covariance),
            other => Err(Error::UnknownName(other.to_string())),
        }
    }
}

impl TriangleTest {
    pub fn name(&self) -> &'static str {
        match self {
            TriangleTest::NoSignaling => "ns-triangle",
            TriangleTest::Finner => "finner-triangle",
            TriangleTest::Entropy => "triangle-entropy",
            TriangleTest::Covariance => "covariance",
        }
    }

    /// Score of `p_pq(p, q)`: positive means violated. For the covariance
    /// test this is the Dykstra residual minus its tolerance.
    pub fn score(&self, p: f64, q: f64) -> Result<f64> {
        let d = zoo::p_pq(p, q)?;
        match self {
            TriangleTest::NoSignaling => Ok(inequalities::ns_triangle(&d)?.value - BOUND_TOL),
            TriangleTest::Finner => {
                let r = inequalities::finner_triangle(&d)?;
                Ok(r.value - r.bound - BOUND_TOL)
            }
            TriangleTest::Entropy => Ok(entropic::check_triangle_entropy(&d)?.value - BOUND_TOL),
            TriangleTest::Covariance => {
                let opts = DykstraOptions::default();
                let e = Embedding::pm1(&[2, 2, 2])?;
                let r = covariance::test_distribution(&d, &Network::triangle(2), &e, opts)?;
                Ok(r.residual - opts.tol)
            }
        }
    }

    pub fn violated(&self, p: f64, q: f64) -> Result<bool> {
        Ok(self.score(p, q)? > 0.0)
    }
}

/// Smallest `t` in `[lo, hi]` with `pred(t)`, to within `tol`, assuming
/// `pred` is monotone (false then true). `None` if `pred(hi)` is false.
pub fn bisect(mut pred: impl FnMut(f64) -> Result<bool>, lo: f64, hi: f64, tol: f64) -> Result<Option<f64>> {
    if !pred(hi)? {
        return Ok(None);
    }
    if pred(lo)? {
        return Ok(Some(lo));
    }
    let (mut a, mut b) = (lo, hi);
    while b - a > tol {
        let mid = 0.5 * (a + b);
        if pred(mid)? {
            b = mid;
        } else {
            a = mid;
        }
    }
    Ok(Some(b))
}

/// Distance kept from the edge `p + q = 1` when bisecting: at `p = 0` the
/// edge point is the deterministic `[111]`, compatible with everything.
pub const EDGE_MARGIN: f64 = 1e-4;

/// Boundary `q` of the violation region at fixed `p`, by bisection over
/// `q in [0, 1 - p - EDGE_MARGIN]`.
pub fn ppq_boundary(test: TriangleTest, p: f64, tol: f64) -> Result<Option<f64>> {
    bisect(|q| test.violated(p, q), 0.0, (1.0 - p - EDGE_MARGIN).max(0.0), tol)
}

/// Grid points `0, step, 2 step, ...` up to `max` (inclusive within 1e-9).
pub fn grid(from: f64, to: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !from.is_finite() || !to.is_finite() {
        return Err(Error::InvalidArgument("grid needs finite bounds and a positive step".into()));
    }
    let mut out = Vec::new();
    let mut k = 0usize;
    loop {
        let t = from + k as f64 * step;
        if t > to + 1e-9 {
            break;
        }
        // snap away accumulated rounding so CSV output is stable
        out.push((t * 1e9).round() / 1e9);
        k += 1;
    }
    Ok(out)
}

/// First violated grid value of `q` at fixed `p`.
pub fn ppq_grid_boundary(test: TriangleTest, p: f64, step: f64) -> Result<Option<f64>> {
    for q in grid(0.0, 1.0 - p, step)? {
        if test.violated(p, q)? {
            return Ok(Some(q));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_endpoints() {
        let g = grid(0.0, 1.0, 0.1).unwrap();
        assert_eq!(g.len(), 11);
        assert_eq!(g[10], 1.0);
        assert!(grid(1.0, 0.0, 0.1).unwrap().is_empty());
    }

    #[test]
    fn bisect_finds_threshold() {
        let t = bisect(|x| Ok(x > 0.3), 0.0, 1.0, 1e-9).unwrap().unwrap();
        assert!((t - 0.3).abs() < 1e-8);
        assert_eq!(bisect(|_| Ok(false), 0.0, 1.0, 1e-3).unwrap(), None);
    }

    #[test]
    fn ns_boundary_at_half() {
        let q = ppq_boundary(TriangleTest::NoSignaling, 0.5, 1e-6).unwrap().unwrap();
        assert!((0.1..0.2).contains(&q), "{q}");
    }
}
