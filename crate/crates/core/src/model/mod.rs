//! Data representation, hyperparameters and priors, the joint Gaussian over
//! (δ, Y), its marginal likelihood, and the analytic conditional of δ.

mod cache;
mod data;
mod joint;
mod theta;

pub use cache::{Candidate, LikelihoodCache};
pub use data::{canonicalize, GroupedDataset, Observation};
pub use joint::{assemble_joint, delta_conditional, log_marginal, DeltaPosterior, JointGaussian};
pub use theta::{log_prior, Coordinate, PriorConfig, Theta};
