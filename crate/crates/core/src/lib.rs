//! Uncertainty-aware multi-robot task allocation.
//!
//! Robot positions are Gaussian beliefs. Instead of allocating on the means
//! alone, the joint belief is expanded into unscented-transform sigma points,
//! each sigma point is allocated with a Hungarian solver, and the resulting
//! permutations are averaged into a stochastic assignment with a confidence
//! estimate. An interpretation policy then picks the executable permutation
//! with the smallest total weighted uncertainty.
//!
//! - [`lsap`]: Hungarian solver, dual certificates and a brute-force oracle.
//! - [`unscented`]: sigma points and moment reconstruction.
//! - [`pipeline`]: scenarios, cost matrices, stochastic allocation and interpretation.
//! - [`evaluation`]: seeded, paired Monte Carlo comparison.
//! - [`cli`]: scenario and report files, and the `sigma-alloc` commands.

pub mod cli;
pub mod evaluation;
pub mod lsap;
pub mod pipeline;
pub mod unscented;

pub use lsap::{BinaryAssignment, CostMatrix};
pub use pipeline::{Scenario, StochasticAssignment};
pub use unscented::{GaussianVector, UtParams};
