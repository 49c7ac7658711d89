//! Hierarchical Gaussian process regression for sharp regression
//! discontinuity designs whose sample splits into known sub-populations.
//!
//! Each sub-population j has its own regression function f_j drawn around a
//! shared Gaussian-process mean g, and its own jump δ_j at the cutoff z = 0.
//! With the hyperparameters θ fixed, δ | Y is Gaussian in closed form; θ is
//! sampled coordinate-wise by Metropolis-within-Gibbs and δ is drawn exactly
//! from its conditional after every sweep.
//!
//! Module map:
//!
//! - [`kernels`]: squared-exponential kernels and the structural matrices.
//! - [`model`]: data, hyperparameters, priors, the joint Gaussian, the
//!   marginal likelihood and the conditional of δ.
//! - [`sampler`]: the Metropolis-within-Gibbs chain.
//! - [`inference`]: posterior summaries, the simultaneous credible ellipsoid
//!   and the two hypothesis tests.
//! - [`windowing`]: restriction to a window around the cutoff.
//! - [`simulation`]: the three synthetic data generating processes and a
//!   replication runner.
//! - [`cli`]: CSV ingestion, report writing and the command implementations
//!   behind the `hgpr` binary.

pub mod cli;
pub mod error;
pub mod inference;
pub mod kernels;
pub mod linalg;
pub mod model;
pub mod rng;
pub mod sampler;
pub mod simulation;
pub mod windowing;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{HgprError, Result};
