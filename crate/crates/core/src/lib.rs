//! Toolkit for correlations in networks with independent sources: building
//! distributions from quantum strategies, closed-form inequality tests,
//! inflation and entropic linear programs, covariance decompositions and
//! explicit local-model search.

pub mod covariance;
pub mod entropic;
pub mod error;
pub mod inequalities;
pub mod inflation;
pub mod linalg;
pub mod localfit;
pub mod lp;
pub mod model;
pub mod quantum;
pub mod scan;
pub mod zoo;

pub use error::{Error, Result};
pub use inequalities::InequalityResult;
pub use localfit::LocalModel;
pub use lp::{LpProblem, LpResult, LpStatus};
pub use model::{Distribution, Network, Scenario};
pub use quantum::{Povm, QState, QuantumStrategy};
