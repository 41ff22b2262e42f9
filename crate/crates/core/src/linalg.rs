//! Small dense matrices: complex matrices for states and effects, real
//! matrices for covariance work, and a cyclic Jacobi symmetric eigensolver.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for k in 0..n {
            m.data[k * n + k] = ONE;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged matrix rows");
        CMatrix { rows: r, cols: c, data: rows.concat() }
    }

    pub fn from_real(rows: &[&[f64]]) -> Self {
        let conv: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.iter().map(|&v| C64::new(v, 0.0)).collect())
            .collect();
        Self::from_rows(&conv)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CMatrix { rows, cols, data }
    }

    /// `|v><v|`.
    pub fn projector(v: &[C64]) -> Self {
        let n = v.len();
        Self::from_fn(n, n, |i, j| v[i] * v[j].conj())
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    pub fn scale(&self, s: C64) -> Self {
        CMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| v * s).collect() }
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|k| self.get(k, k)).sum()
    }

    pub fn kron(&self, other: &CMatrix) -> Self {
        let (r, c) = (self.rows * other.rows, self.cols * other.cols);
        Self::from_fn(r, c, |i, j| {
            self.get(i / other.rows, j / other.cols) * other.get(i % other.rows, j % other.cols)
        })
    }

    /// Kronecker product of a list, left to right.
    pub fn kron_all(ms: &[CMatrix]) -> Self {
        ms.iter().fold(CMatrix::identity(1), |acc, m| acc.kron(m))
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square() && self.max_abs_diff(&self.adjoint()) <= tol
    }

    /// Eigenvalues of a Hermitian matrix, via the real symmetric embedding
    /// `[[Re, -Im], [Im, Re]]` whose spectrum is that of `self` doubled.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        assert!(self.is_square());
        let n = self.rows;
        let mut emb = RMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                // symmetrize so tiny Hermiticity defects do not leak in
                let v = (self.get(i, j) + self.get(j, i).conj()) * 0.5;
                emb.set(i, j, v.re);
                emb.set(i + n, j + n, v.re);
                emb.set(i, j + n, -v.im);
                emb.set(i + n, j, v.im);
            }
        }
        let (mut vals, _) = jacobi_eigh(&emb);
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        vals.chunks(2).map(|pair| 0.5 * (pair[0] + pair[1])).collect()
    }

    pub fn is_psd(&self, tol: f64) -> bool {
        self.is_hermitian(tol) && self.hermitian_eigenvalues().iter().all(|&e| e >= -tol)
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, rhs.rows, "matrix product shape mismatch");
        let mut out = CMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == ZERO {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs.data[k * rhs.cols + j];
                }
            }
        }
        out
    }
}

/// Dense row-major real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    pub data: Vec<f64>,
}

impl RMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        RMatrix { n_rows, n_cols, data: vec![0.0; n_rows * n_cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for k in 0..n {
            m.set(k, k, 1.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged matrix rows");
        RMatrix { n_rows: r, n_cols: c, data: rows.concat() }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n_cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n_cols + j] = v;
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        if self.n_rows != self.n_cols {
            return false;
        }
        (0..self.n_rows).all(|i| (0..i).all(|j| (self.get(i, j) - self.get(j, i)).abs() <= tol))
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn sub(&self, other: &RMatrix) -> RMatrix {
        RMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn add(&self, other: &RMatrix) -> RMatrix {
        RMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn transpose(&self) -> RMatrix {
        let mut t = RMatrix::zeros(self.n_cols, self.n_rows);
        for i in 0..self.n_rows {
            for j in 0..self.n_cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn matmul(&self, other: &RMatrix) -> RMatrix {
        assert_eq!(self.n_cols, other.n_rows);
        let mut out = RMatrix::zeros(self.n_rows, other.n_cols);
        for i in 0..self.n_rows {
            for k in 0..self.n_cols {
                let a = self.get(i, k);
                for j in 0..other.n_cols {
                    out.data[i * other.n_cols + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let (vals, _) = jacobi_eigh(self);
        vals.into_iter().fold(f64::INFINITY, f64::min)
    }
}

/// Solves `a x = b` for symmetric positive-definite `a` by Cholesky
/// factorization; `None` if a pivot is not positive.
pub fn cholesky_solve(a: &RMatrix, b: &[f64]) -> Option<Vec<f64>> {
    let n = a.n_rows;
    assert_eq!(n, a.n_cols, "cholesky_solve needs a square matrix");
    assert_eq!(n, b.len(), "right-hand side length");
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(s > 0.0) {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] -= l[i * n + k] * y[k];
        }
        y[i] /= l[i * n + i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            y[i] -= l[k * n + i] * y[k];
        }
        y[i] /= l[i * n + i];
    }
    Some(y)
}

/// Off-diagonal threshold at which a Jacobi sweep loop stops.
pub const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi eigendecomposition of a real symmetric matrix.
///
/// Returns eigenvalues (unsorted) and the matrix whose columns are the
/// corresponding orthonormal eigenvectors.
pub fn jacobi_eigh(m: &RMatrix) -> (Vec<f64>, RMatrix) {
    let n = m.n_rows;
    assert_eq!(n, m.n_cols, "jacobi_eigh needs a square matrix");
    let mut a = m.clone();
    let mut v = RMatrix::identity(n);
    let scale = a.frobenius().max(1.0);
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a.get(i, j).powi(2))
            .sum::<f64>()
            .sqrt();
        if off <= JACOBI_TOL * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq.abs() < f64::MIN_POSITIVE {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }
    ((0..n).map(|k| a.get(k, k)).collect(), v)
}

/// Nearest PSD matrix in Frobenius norm: clip negative eigenvalues.
pub fn project_psd(m: &RMatrix) -> RMatrix {
    let n = m.n_rows;
    let (vals, vecs) = jacobi_eigh(m);
    let mut out = RMatrix::zeros(n, n);
    for (k, &lam) in vals.iter().enumerate() {
        if lam <= 0.0 {
            continue;
        }
        for i in 0..n {
            let vi = vecs.get(i, k) * lam;
            for j in 0..n {
                out.data[i * n + j] += vi * vecs.get(j, k);
            }
        }
    }
    // restore exact symmetry
    for i in 0..n {
        for j in 0..i {
            let s = 0.5 * (out.get(i, j) + out.get(j, i));
            out.set(i, j, s);
            out.set(j, i, s);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_diagonalizes_known_matrix() {
        let m = RMatrix::from_rows(&[vec![2.0, 1.0, 0.0], vec![1.0, 2.0, 0.0], vec![0.0, 0.0, 5.0]]);
        let (mut vals, vecs) = jacobi_eigh(&m);
        let recon = {
            let mut d = RMatrix::zeros(3, 3);
            for k in 0..3 {
                d.set(k, k, vals[k]);
            }
            vecs.matmul(&d).matmul(&vecs.transpose())
        };
        assert!(recon.sub(&m).frobenius() < 1e-12);
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (got, want) in vals.iter().zip([1.0, 3.0, 5.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn psd_projection_clips_negative_part() {
        let m = RMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        let p = project_psd(&m);
        // eigenvalues 3 and -1; keeping 3 gives 1.5 everywhere
        for v in &p.data {
            assert!((v - 1.5).abs() < 1e-12);
        }
    }

    #[test]
    fn hermitian_spectrum_of_pauli_y() {
        let y = CMatrix::from_rows(&[vec![ZERO, -I], vec![I, ZERO]]);
        let ev = y.hermitian_eigenvalues();
        assert!((ev[0] + 1.0).abs() < 1e-12 && (ev[1] - 1.0).abs() < 1e-12);
        assert!(!y.is_psd(1e-9));
        assert!(CMatrix::identity(3).is_psd(1e-9));
    }

    #[test]
    fn kron_shapes_and_values() {
        let a = CMatrix::from_real(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let k = a.kron(&CMatrix::identity(2));
        assert_eq!((k.rows, k.cols), (4, 4));
        assert_eq!(k.get(2, 0), C64::new(3.0, 0.0));
        assert_eq!(k.get(3, 1), C64::new(3.0, 0.0));
        assert_eq!(k.get(2, 1), ZERO);
    }
}
