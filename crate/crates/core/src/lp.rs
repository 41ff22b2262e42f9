//! Dense two-phase simplex with Bland's rule over `f64` or exact rationals.
//!
//! Problems are stated in the natural form
//!
//! ```text
//! minimize    c . z
//! subject to  A_eq z  = b_eq
//!             A_ub z <= b_ub
//!             l <= z <= u        (either side may be absent)
//! ```
//!
//! Infeasible problems come back with a Farkas certificate `(y_eq, y_ub)`,
//! `y_ub >= 0`, such that the combination `r = A_eq^T y_eq + A_ub^T y_ub`
//! satisfies `min_{l <= z <= u} r . z > y_eq . b_eq + y_ub . b_ub`. The check
//! needs nothing from the solver and is exact in rational mode.

use std::fmt::{self, Debug, Write as _};
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Scalar field used by the simplex.
pub trait Field:
    Clone
    + Debug
    + PartialEq
    + PartialOrd
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// Pivot and sign tolerance: zero for exact fields.
    fn eps() -> Self;
    /// Tolerance used when re-verifying witnesses and certificates.
    fn verify_tol() -> Self;
    fn from_f64(v: f64) -> Self;
    fn to_f64(&self) -> f64;

    fn is_pos(&self) -> bool {
        *self > Self::eps()
    }
    fn is_neg(&self) -> bool {
        *self < -Self::eps()
    }
}

impl Field for f64 {
    fn eps() -> Self {
        1e-9
    }
    fn verify_tol() -> Self {
        1e-8
    }
    fn from_f64(v: f64) -> Self {
        v
    }
    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Field for BigRational {
    fn eps() -> Self {
        BigRational::zero()
    }
    fn verify_tol() -> Self {
        BigRational::zero()
    }
    fn from_f64(v: f64) -> Self {
        rationalize(v)
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

/// Exact rational for `v`: a fraction with denominator at most 10^6 when one
/// lies within 1e-14 of `v`, otherwise the exact binary value.
pub fn rationalize(v: f64) -> BigRational {
    assert!(v.is_finite(), "cannot rationalize {v}");
    // continued fraction convergents
    let (mut h0, mut h1) = (0i128, 1i128);
    let (mut k0, mut k1) = (1i128, 0i128);
    let mut x = v;
    for _ in 0..40 {
        let a = x.floor();
        if a.abs() > 1e15 {
            break;
        }
        let ai = a as i128;
        let h2 = ai * h1 + h0;
        let k2 = ai * k1 + k0;
        if k2 > 1_000_000 {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        if (v - h1 as f64 / k1 as f64).abs() < 1e-14 {
            return BigRational::new(BigInt::from(h1), BigInt::from(k1));
        }
        let frac = x - a;
        if frac.abs() < 1e-300 {
            break;
        }
        x = 1.0 / frac;
    }
    BigRational::from_float(v).expect("finite float")
}

/// Linear program in natural form; see the module docs.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem<T = f64> {
    pub n_vars: usize,
    pub a_eq: Vec<Vec<T>>,
    pub b_eq: Vec<T>,
    pub a_ub: Vec<Vec<T>>,
    pub b_ub: Vec<T>,
    pub lower: Vec<Option<T>>,
    pub upper: Vec<Option<T>>,
    /// Minimized when present; otherwise a pure feasibility problem.
    pub objective: Option<Vec<T>>,
}

impl<T: Field> LpProblem<T> {
    /// Problem with `n` variables bounded below by zero and no constraints.
    pub fn new(n: usize) -> Self {
        LpProblem {
            n_vars: n,
            a_eq: Vec::new(),
            b_eq: Vec::new(),
            a_ub: Vec::new(),
            b_ub: Vec::new(),
            lower: vec![Some(T::zero()); n],
            upper: vec![None; n],
            objective: None,
        }
    }

    pub fn add_eq(&mut self, row: Vec<T>, rhs: T) {
        self.a_eq.push(row);
        self.b_eq.push(rhs);
    }

    pub fn add_le(&mut self, row: Vec<T>, rhs: T) {
        self.a_ub.push(row);
        self.b_ub.push(rhs);
    }

    pub fn add_ge(&mut self, row: Vec<T>, rhs: T) {
        self.a_ub.push(row.into_iter().map(|v| -v).collect());
        self.b_ub.push(-rhs);
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_vars;
        let bad_row = |rows: &[Vec<T>]| rows.iter().any(|r| r.len() != n);
        if bad_row(&self.a_eq) || bad_row(&self.a_ub) {
            return Err(Error::Dimension(format!("constraint row length differs from {n} variables")));
        }
        if self.a_eq.len() != self.b_eq.len() || self.a_ub.len() != self.b_ub.len() {
            return Err(Error::Dimension("right-hand side length differs from row count".into()));
        }
        if self.lower.len() != n || self.upper.len() != n {
            return Err(Error::Dimension("bounds must be given for every variable".into()));
        }
        if let Some(c) = &self.objective {
            if c.len() != n {
                return Err(Error::Dimension("objective length differs from variable count".into()));
            }
        }
        for j in 0..n {
            if let (Some(l), Some(u)) = (&self.lower[j], &self.upper[j]) {
                if l > u {
                    // still well formed; the solver reports infeasibility
                    continue;
                }
            }
        }
        Ok(())
    }

    pub fn n_constraints(&self) -> usize {
        self.a_eq.len() + self.a_ub.len()
    }

    /// Lossless-where-possible conversion to exact rationals.
    pub fn to_rational(&self) -> LpProblem<BigRational> {
        let conv = |v: &T| rationalize(v.to_f64());
        let rows = |m: &[Vec<T>]| m.iter().map(|r| r.iter().map(conv).collect()).collect();
        LpProblem {
            n_vars: self.n_vars,
            a_eq: rows(&self.a_eq),
            b_eq: self.b_eq.iter().map(conv).collect(),
            a_ub: rows(&self.a_ub),
            b_ub: self.b_ub.iter().map(conv).collect(),
            lower: self.lower.iter().map(|b| b.as_ref().map(conv)).collect(),
            upper: self.upper.iter().map(|b| b.as_ref().map(conv)).collect(),
            objective: self.objective.as_ref().map(|c| c.iter().map(conv).collect()),
        }
    }

    /// CPLEX LP text format, for cross-checking with external solvers.
    pub fn to_lp_format(&self) -> String {
        let mut s = String::new();
        let term = |s: &mut String, coef: f64, j: usize, first: &mut bool| {
            if coef == 0.0 {
                return;
            }
            let sign = if coef < 0.0 { "-" } else if *first { "" } else { "+" };
            let _ = write!(s, " {sign} {} z{j}", coef.abs());
            *first = false;
        };
        s.push_str("Minimize\n obj:");
        let mut first = true;
        if let Some(c) = &self.objective {
            for (j, v) in c.iter().enumerate() {
                term(&mut s, v.to_f64(), j, &mut first);
            }
        }
        if first {
            s.push_str(" 0 z0");
        }
        s.push_str("\nSubject To\n");
        for (k, (row, rhs)) in self.a_eq.iter().zip(&self.b_eq).enumerate() {
            let _ = write!(s, " e{k}:");
            let mut first = true;
            for (j, v) in row.iter().enumerate() {
                term(&mut s, v.to_f64(), j, &mut first);
            }
            if first {
                s.push_str(" 0 z0");
            }
            let _ = writeln!(s, " = {}", rhs.to_f64());
        }
        for (k, (row, rhs)) in self.a_ub.iter().zip(&self.b_ub).enumerate() {
            let _ = write!(s, " u{k}:");
            let mut first = true;
            for (j, v) in row.iter().enumerate() {
                term(&mut s, v.to_f64(), j, &mut first);
            }
            if first {
                s.push_str(" 0 z0");
            }
            let _ = writeln!(s, " <= {}", rhs.to_f64());
        }
        s.push_str("Bounds\n");
        for j in 0..self.n_vars {
            match (&self.lower[j], &self.upper[j]) {
                (None, None) => {
                    let _ = writeln!(s, " z{j} free");
                }
                (l, u) => {
                    let lo = l.as_ref().map_or("-inf".to_string(), |v| v.to_f64().to_string());
                    let hi = u.as_ref().map_or("+inf".to_string(), |v| v.to_f64().to_string());
                    let _ = writeln!(s, " {lo} <= z{j} <= {hi}");
                }
            }
        }
        s.push_str("End\n");
        s
    }
}

/// Dual multipliers proving infeasibility.
#[derive(Debug, Clone, PartialEq)]
pub struct FarkasCertificate<T> {
    pub y_eq: Vec<T>,
    pub y_ub: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpStatus<T> {
    Feasible(Vec<T>),
    Infeasible(FarkasCertificate<T>),
    /// Feasible point and a recession direction along which the objective decreases.
    Unbounded { point: Vec<T>, ray: Vec<T> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpResult<T = f64> {
    pub status: LpStatus<T>,
    pub objective: Option<T>,
}

impl<T> LpResult<T> {
    pub fn is_feasible(&self) -> bool {
        matches!(self.status, LpStatus::Feasible(_))
    }
    pub fn is_infeasible(&self) -> bool {
        matches!(self.status, LpStatus::Infeasible(_))
    }
    pub fn witness(&self) -> Option<&[T]> {
        match &self.status {
            LpStatus::Feasible(z) => Some(z),
            _ => None,
        }
    }
    pub fn certificate(&self) -> Option<&FarkasCertificate<T>> {
        match &self.status {
            LpStatus::Infeasible(c) => Some(c),
            _ => None,
        }
    }
}

impl<T: Field> fmt::Display for LpResult<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.status {
            LpStatus::Feasible(_) => write!(f, "feasible")?,
            LpStatus::Infeasible(_) => write!(f, "infeasible")?,
            LpStatus::Unbounded { .. } => write!(f, "unbounded")?,
        }
        if let Some(o) = &self.objective {
            write!(f, " (objective {})", o.to_f64())?;
        }
        Ok(())
    }
}

/// How an original variable is expressed through standard-form columns:
/// `z = offset + sum sign * y_col`.
#[derive(Debug, Clone)]
struct VarMap<T> {
    offset: T,
    cols: Vec<(usize, bool)>,
}

struct Tableau<T> {
    /// `m` rows of `n + 1` entries, last entry the right-hand side.
    rows: Vec<Vec<T>>,
    /// Reduced-cost row, last entry minus the objective value.
    cost: Vec<T>,
    basis: Vec<usize>,
    n: usize,
}

impl<T: Field> Tableau<T> {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c].clone();
        let inv = T::one() / p;
        for v in self.rows[r].iter_mut() {
            *v = v.clone() * inv.clone();
        }
        let prow = self.rows[r].clone();
        let nz: Vec<usize> = (0..=self.n).filter(|&j| !prow[j].is_zero()).collect();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c].clone();
            if f.is_zero() {
                continue;
            }
            for &j in &nz {
                row[j] = row[j].clone() - f.clone() * prow[j].clone();
            }
            row[c] = T::zero();
        }
        let f = self.cost[c].clone();
        if !f.is_zero() {
            for &j in &nz {
                self.cost[j] = self.cost[j].clone() - f.clone() * prow[j].clone();
            }
            self.cost[c] = T::zero();
        }
        self.basis[r] = c;
    }

    /// Simplex iterations restricted to columns with `allowed[j]`: largest
    /// reduced cost first, falling back to Bland's rule after a run of
    /// degenerate pivots. Returns the entering column of an unbounded
    /// direction, if any.
    fn run(&mut self, allowed: &[bool]) -> Result<Option<usize>> {
        let m = self.rows.len();
        let limit = 50_000 + 200 * (m + self.n);
        let mut degenerate = 0usize;
        for _ in 0..limit {
            let bland = degenerate > 50;
            let enter = if bland {
                (0..self.n).find(|&j| allowed[j] && self.cost[j].is_neg())
            } else {
                let mut pick: Option<usize> = None;
                for j in (0..self.n).filter(|&j| allowed[j] && self.cost[j].is_neg()) {
                    if pick.map_or(true, |p| self.cost[j] < self.cost[p]) {
                        pick = Some(j);
                    }
                }
                pick
            };
            let Some(c) = enter else { return Ok(None) };
            let mut best: Option<(usize, T)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if !row[c].is_pos() {
                    continue;
                }
                let ratio = row[self.n].clone() / row[c].clone();
                let better = match &best {
                    None => true,
                    Some((bi, br)) => {
                        if ratio.clone() < br.clone() - T::eps() {
                            true
                        } else if ratio.clone() > br.clone() + T::eps() {
                            false
                        } else if bland {
                            self.basis[i] < self.basis[*bi]
                        } else {
                            row[c] > self.rows[*bi][c]
                        }
                    }
                };
                if better {
                    best = Some((i, ratio));
                }
            }
            match best {
                Some((r, ratio)) => {
                    if ratio.is_pos() {
                        degenerate = 0;
                    } else {
                        degenerate += 1;
                    }
                    self.pivot(r, c)
                }
                None => return Ok(Some(c)),
            }
        }
        Err(Error::Numerical(format!("simplex iteration limit {limit} reached")))
    }

    fn value_of(&self, col: usize) -> T {
        self.basis
            .iter()
            .position(|&b| b == col)
            .map_or(T::zero(), |r| self.rows[r][self.n].clone())
    }
}

/// Solves `p`; see the module docs for the meaning of the result.
pub fn solve<T: Field>(p: &LpProblem<T>) -> Result<LpResult<T>> {
    p.validate()?;
    let n = p.n_vars;
    // variable substitution
    let mut maps: Vec<VarMap<T>> = Vec::with_capacity(n);
    let mut ncols = 0;
    let mut range_rows: Vec<(usize, T)> = Vec::new();
    for j in 0..n {
        match (&p.lower[j], &p.upper[j]) {
            (Some(l), u) => {
                maps.push(VarMap { offset: l.clone(), cols: vec![(ncols, true)] });
                if let Some(u) = u {
                    range_rows.push((ncols, u.clone() - l.clone()));
                }
                ncols += 1;
            }
            (None, Some(u)) => {
                maps.push(VarMap { offset: u.clone(), cols: vec![(ncols, false)] });
                ncols += 1;
            }
            (None, None) => {
                maps.push(VarMap { offset: T::zero(), cols: vec![(ncols, true), (ncols + 1, false)] });
                ncols += 2;
            }
        }
    }
    let n_struct = ncols;
    let m_eq = p.a_eq.len();
    let m_ub = p.a_ub.len();
    let m_rng = range_rows.len();
    let m = m_eq + m_ub + m_rng;
    let n_slack = m_ub + m_rng;
    // rows in structural columns, plus slack index and rhs
    let mut std_rows: Vec<(Vec<T>, Option<usize>, T)> = Vec::with_capacity(m);
    let expand = |row: &[T], rhs: &T| -> (Vec<T>, T) {
        let mut out = vec![T::zero(); n_struct];
        let mut b = rhs.clone();
        for (j, a) in row.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            b = b - a.clone() * maps[j].offset.clone();
            for &(c, pos) in &maps[j].cols {
                out[c] = if pos { a.clone() } else { -a.clone() };
            }
        }
        (out, b)
    };
    for (row, rhs) in p.a_eq.iter().zip(&p.b_eq) {
        let (r, b) = expand(row, rhs);
        std_rows.push((r, None, b));
    }
    for (k, (row, rhs)) in p.a_ub.iter().zip(&p.b_ub).enumerate() {
        let (r, b) = expand(row, rhs);
        std_rows.push((r, Some(n_struct + k), b));
    }
    for (k, (col, width)) in range_rows.iter().enumerate() {
        let mut r = vec![T::zero(); n_struct];
        r[*col] = T::one();
        std_rows.push((r, Some(n_struct + m_ub + k), width.clone()));
    }
    // flip rows to nonnegative rhs; slack columns with +1 after the flip start basic
    let mut flipped = vec![false; m];
    let mut needs_art = vec![true; m];
    for (i, (_, slack, b)) in std_rows.iter().enumerate() {
        if b < &T::zero() {
            flipped[i] = true;
        } else if slack.is_some() {
            needs_art[i] = false;
        }
    }
    let art_rows: Vec<usize> = (0..m).filter(|&i| needs_art[i]).collect();
    let n_art = art_rows.len();
    let total = n_struct + n_slack + n_art;
    let mut rows = Vec::with_capacity(m);
    let mut basis = vec![0; m];
    let mut init_col = vec![0; m];
    let mut art_k = 0;
    for (i, (r, slack, b)) in std_rows.into_iter().enumerate() {
        let mut full = vec![T::zero(); total + 1];
        let sgn = |v: T| if flipped[i] { -v } else { v };
        for (c, v) in r.into_iter().enumerate() {
            if !v.is_zero() {
                full[c] = sgn(v);
            }
        }
        if let Some(s) = slack {
            full[s] = sgn(T::one());
        }
        full[total] = sgn(b);
        if needs_art[i] {
            let c = n_struct + n_slack + art_k;
            full[c] = T::one();
            basis[i] = c;
            init_col[i] = c;
            art_k += 1;
        } else {
            let s = slack.expect("slack basis");
            basis[i] = s;
            init_col[i] = s;
        }
        rows.push(full);
    }
    // phase one: minimize the sum of artificials
    let mut cost = vec![T::zero(); total + 1];
    for k in 0..n_art {
        cost[n_struct + n_slack + k] = T::one();
    }
    for &i in &art_rows {
        for j in 0..=total {
            if !rows[i][j].is_zero() {
                cost[j] = cost[j].clone() - rows[i][j].clone();
            }
        }
    }
    let mut tab = Tableau { rows, cost, basis, n: total };
    let all = vec![true; total];
    tab.run(&all)?;
    let phase1 = -tab.cost[total].clone();
    if phase1.is_pos() {
        // y_r = c_init - d_init on the flipped system, unflip, negate
        let mut pi: Vec<T> = (0..m)
            .map(|i| {
                let c0 = if needs_art[i] { T::one() } else { T::zero() };
                let y = c0 - tab.cost[init_col[i]].clone();
                if flipped[i] {
                    -y
                } else {
                    y
                }
            })
            .collect();
        pi.truncate(m_eq + m_ub);
        let y_ub = pi.split_off(m_eq).into_iter().map(|v| -v).collect();
        let y_eq = pi.into_iter().map(|v| -v).collect();
        return Ok(LpResult { status: LpStatus::Infeasible(FarkasCertificate { y_eq, y_ub }), objective: None });
    }
    // drive artificials out of the basis, dropping redundant rows
    let is_art = |c: usize| c >= n_struct + n_slack;
    let mut r = 0;
    while r < tab.rows.len() {
        if is_art(tab.basis[r]) {
            let col = (0..n_struct + n_slack).find(|&j| !tab.rows[r][j].is_zero() && {
                let v = tab.rows[r][j].clone();
                v.is_pos() || v.is_neg()
            });
            match col {
                Some(c) => tab.pivot(r, c),
                None => {
                    tab.rows.remove(r);
                    tab.basis.remove(r);
                    continue;
                }
            }
        }
        r += 1;
    }
    // phase two
    let mut allowed = vec![true; total];
    for a in allowed.iter_mut().skip(n_struct + n_slack) {
        *a = false;
    }
    let mut cost = vec![T::zero(); total + 1];
    if let Some(c) = &p.objective {
        for (j, cj) in c.iter().enumerate() {
            for &(col, pos) in &maps[j].cols {
                cost[col] = if pos { cj.clone() } else { -cj.clone() };
            }
        }
        for (i, &b) in tab.basis.iter().enumerate() {
            let cb = cost[b].clone();
            if cb.is_zero() {
                continue;
            }
            for j in 0..=total {
                if !tab.rows[i][j].is_zero() {
                    cost[j] = cost[j].clone() - cb.clone() * tab.rows[i][j].clone();
                }
            }
        }
    }
    tab.cost = cost;
    let unbounded = if p.objective.is_some() { tab.run(&allowed)? } else { None };
    let to_z = |ycol: &dyn Fn(usize) -> T, with_offset: bool| -> Vec<T> {
        maps.iter()
            .map(|mp| {
                let mut v = if with_offset { mp.offset.clone() } else { T::zero() };
                for &(c, pos) in &mp.cols {
                    let y = ycol(c);
                    v = if pos { v + y } else { v - y };
                }
                v
            })
            .collect()
    };
    let point = to_z(&|c| tab.value_of(c), true);
    let objective = p.objective.as_ref().map(|c| {
        c.iter().zip(&point).fold(T::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
    });
    if let Some(enter) = unbounded {
        let dir = |c: usize| -> T {
            if c == enter {
                return T::one();
            }
            match tab.basis.iter().position(|&b| b == c) {
                Some(r) => -tab.rows[r][enter].clone(),
                None => T::zero(),
            }
        };
        let ray = to_z(&dir, false);
        return Ok(LpResult { status: LpStatus::Unbounded { point, ray }, objective: None });
    }
    Ok(LpResult { status: LpStatus::Feasible(point), objective })
}

fn dot<T: Field>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

/// Checks that `z` satisfies every constraint of `p` within the field tolerance.
pub fn check_point<T: Field>(p: &LpProblem<T>, z: &[T]) -> bool {
    let tol = T::verify_tol();
    if z.len() != p.n_vars {
        return false;
    }
    let eq_ok = p.a_eq.iter().zip(&p.b_eq).all(|(row, b)| {
        let d = dot(row, z) - b.clone();
        d <= tol && d >= -tol.clone()
    });
    let ub_ok = p.a_ub.iter().zip(&p.b_ub).all(|(row, b)| dot(row, z) - b.clone() <= tol);
    let bounds_ok = (0..p.n_vars).all(|j| {
        p.lower[j].as_ref().map_or(true, |l| z[j].clone() - l.clone() >= -tol.clone())
            && p.upper[j].as_ref().map_or(true, |u| z[j].clone() - u.clone() <= tol)
    });
    eq_ok && ub_ok && bounds_ok
}

/// Re-checks a Farkas certificate independently of the solver.
pub fn check_farkas<T: Field>(p: &LpProblem<T>, cert: &FarkasCertificate<T>) -> bool {
    let tol = T::verify_tol();
    if cert.y_eq.len() != p.a_eq.len() || cert.y_ub.len() != p.a_ub.len() {
        return false;
    }
    if cert.y_ub.iter().any(|y| *y < -tol.clone()) {
        return false;
    }
    let mut r = vec![T::zero(); p.n_vars];
    for (row, y) in p.a_eq.iter().zip(&cert.y_eq).chain(p.a_ub.iter().zip(&cert.y_ub)) {
        if y.is_zero() {
            continue;
        }
        for (rj, a) in r.iter_mut().zip(row) {
            if !a.is_zero() {
                *rj = rj.clone() + a.clone() * y.clone();
            }
        }
    }
    let mut min_box = T::zero();
    for (j, rj) in r.iter().enumerate() {
        if *rj > tol {
            match &p.lower[j] {
                Some(l) => min_box = min_box + rj.clone() * l.clone(),
                None => return false,
            }
        } else if *rj < -tol.clone() {
            match &p.upper[j] {
                Some(u) => min_box = min_box + rj.clone() * u.clone(),
                None => return false,
            }
        }
    }
    let yb = dot(&cert.y_eq, &p.b_eq) + dot(&cert.y_ub, &p.b_ub);
    min_box - yb > tol
}

/// Independent re-check of a solver result against its problem.
pub fn verify_certificate<T: Field>(p: &LpProblem<T>, r: &LpResult<T>) -> bool {
    match &r.status {
        LpStatus::Feasible(z) => check_point(p, z),
        LpStatus::Infeasible(cert) => check_farkas(p, cert),
        LpStatus::Unbounded { point, ray } => {
            let tol = T::verify_tol();
            let Some(c) = &p.objective else { return false };
            let ray_ok = p.a_eq.iter().all(|row| {
                let v = dot(row, ray);
                v <= tol && v >= -tol.clone()
            }) && p.a_ub.iter().all(|row| dot(row, ray) <= tol)
                && (0..p.n_vars).all(|j| {
                    (p.lower[j].is_none() || ray[j] >= -tol.clone()) && (p.upper[j].is_none() || ray[j] <= tol)
                });
            check_point(p, point) && ray_ok && dot(c, ray) < -tol
        }
    }
}

/// Convenience: solve the exact rational version of a float problem.
pub fn solve_exact(p: &LpProblem<f64>) -> Result<LpResult<BigRational>> {
    solve(&p.to_rational())
}

/// Rational to `f64` for reporting.
pub fn rat_to_f64(v: &BigRational) -> f64 {
    ToPrimitive::to_f64(v).unwrap_or(f64::NAN)
}

/// Whether a rational is nonnegative.
pub fn rat_nonneg(v: &BigRational) -> bool {
    !v.is_negative()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_equality_is_feasible() {
        let mut p = LpProblem::<f64>::new(1);
        p.add_eq(vec![1.0], 1.0);
        let r = solve(&p).unwrap();
        assert_eq!(r.witness().unwrap(), &[1.0]);
        assert!(verify_certificate(&p, &r));
    }

    #[test]
    fn negative_upper_bound_is_infeasible() {
        let mut p = LpProblem::<f64>::new(1);
        p.add_le(vec![1.0], -1.0);
        let r = solve(&p).unwrap();
        assert!(r.is_infeasible());
        assert!(verify_certificate(&p, &r));
    }

    #[test]
    fn perturbed_certificate_fails() {
        let mut p = LpProblem::<f64>::new(1);
        p.add_le(vec![1.0], -1.0);
        let r = solve(&p).unwrap();
        let mut cert = r.certificate().unwrap().clone();
        cert.y_ub[0] = -cert.y_ub[0];
        assert!(!check_farkas(&p, &cert));
    }

    #[test]
    fn rational_certificate_is_exact() {
        let mut p = LpProblem::<BigRational>::new(2);
        let q = |n: i64, d: i64| BigRational::new(BigInt::from(n), BigInt::from(d));
        p.add_eq(vec![q(1, 1), q(1, 1)], q(1, 1));
        p.add_ge(vec![q(1, 1), q(0, 1)], q(2, 3));
        p.add_ge(vec![q(0, 1), q(1, 1)], q(1, 2));
        let r = solve(&p).unwrap();
        assert!(r.is_infeasible());
        assert!(verify_certificate(&p, &r));
    }

    #[test]
    fn small_optimization() {
        // max x + y s.t. x + 2y <= 4, 3x + y <= 6
        let mut p = LpProblem::<f64>::new(2);
        p.add_le(vec![1.0, 2.0], 4.0);
        p.add_le(vec![3.0, 1.0], 6.0);
        p.objective = Some(vec![-1.0, -1.0]);
        let r = solve(&p).unwrap();
        assert!((r.objective.unwrap() + 2.8).abs() < 1e-12);
        assert!(verify_certificate(&p, &r));
    }

    #[test]
    fn free_and_upper_bounded_variables() {
        // min z0 with z0 free, z0 >= -3 - z1, z1 <= 2
        let mut p = LpProblem::<f64>::new(2);
        p.lower = vec![None, None];
        p.upper = vec![None, Some(2.0)];
        p.add_ge(vec![1.0, 1.0], -3.0);
        p.objective = Some(vec![1.0, 0.0]);
        let r = solve(&p).unwrap();
        assert!((r.objective.unwrap() + 5.0).abs() < 1e-12);
    }

    #[test]
    fn unbounded_ray_verifies() {
        let mut p = LpProblem::<f64>::new(2);
        p.add_le(vec![1.0, -1.0], 1.0);
        p.objective = Some(vec![-1.0, 0.0]);
        let r = solve(&p).unwrap();
        assert!(matches!(r.status, LpStatus::Unbounded { .. }));
        assert!(verify_certificate(&p, &r));
    }

    #[test]
    fn infeasible_bounds_with_ranges() {
        // 0 <= z <= 1 and z >= 2
        let mut p = LpProblem::<f64>::new(1);
        p.upper = vec![Some(1.0)];
        p.add_ge(vec![1.0], 2.0);
        let r = solve(&p).unwrap();
        assert!(r.is_infeasible());
        assert!(verify_certificate(&p, &r));
    }

    #[test]
    fn rationalize_small_fractions() {
        assert_eq!(rationalize(1.0 / 3.0), BigRational::new(1.into(), 3.into()));
        assert_eq!(rationalize(0.5), BigRational::new(1.into(), 2.into()));
        assert_eq!(rationalize(-0.75), BigRational::new((-3).into(), 4.into()));
        assert_eq!(rationalize(0.0), BigRational::zero());
    }

    #[test]
    fn lp_text_has_sections() {
        let mut p = LpProblem::<f64>::new(2);
        p.add_eq(vec![1.0, 1.0], 1.0);
        let s = p.to_lp_format();
        assert!(s.contains("Subject To") && s.contains("e0:") && s.ends_with("End\n"));
    }
}
