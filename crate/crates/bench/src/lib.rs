//! Fixtures shared by the criterion benches.

use netbell_core::covariance::{covariance, Embedding};
use netbell_core::linalg::RMatrix;
use netbell_core::lp::LpProblem;
use netbell_core::quantum::{presets, QuantumStrategy};
use netbell_core::{zoo, Network};

/// Bilocal elegant-measurement strategy at full visibility.
pub fn ejm_strategy() -> QuantumStrategy {
    presets::bilocal_ejm(1.0).expect("preset builds")
}

/// Triangle strategy with elegant measurements on every party.
pub fn elegant_triangle() -> QuantumStrategy {
    presets::triangle_elegant(1.0).expect("preset builds")
}

/// Dense random-looking feasibility LP with `n` variables and `m` equality rows.
pub fn dense_lp(n: usize, m: usize) -> LpProblem<f64> {
    let mut p = LpProblem::new(n);
    // rows of a fixed pseudo-random pattern with a known feasible point z = 1/n
    let mut state = 0x2545_f491_u64;
    for _ in 0..m {
        let row: Vec<f64> = (0..n)
            .map(|_| {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                (state % 1000) as f64 / 1000.0
            })
            .collect();
        let rhs = row.iter().sum::<f64>() / n as f64;
        p.add_eq(row, rhs);
    }
    p
}

/// GHZ covariance on the triangle with the +-1 embedding.
pub fn ghz_covariance() -> (RMatrix, Network, Vec<usize>) {
    let e = Embedding::pm1(&[2, 2, 2]).expect("binary outputs");
    let cov = covariance(&zoo::ghz(), &e).expect("no-input distribution");
    (cov, Network::triangle(2), e.coordinate_parties())
}
