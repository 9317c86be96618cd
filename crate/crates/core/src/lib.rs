//! Recovery of a sparse signal and a sparse gross corruption from subsampled
//! Fourier measurements by ℓ₁ + ℓ₁ minimization, with exact optimality
//! certificates and reproducible phase-transition experiments.

pub mod certificate;
pub mod error;
pub mod experiments;
pub mod fourier;
pub mod io;
pub mod linalg;
pub mod problem;
pub mod solver;
pub mod vecops;

pub use error::{Error, Result};
pub use fourier::PartialFourierOperator;
pub use problem::{ProblemInstance, SyntheticConfig};
pub use solver::{solve, Solution, SolveStatus, SolverConfig};
