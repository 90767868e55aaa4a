//! Acquisition functions over a conditioned Gaussian process.
//!
//! Expected improvement and upper confidence bound come in closed form for a
//! single point and as Monte-Carlo estimates for batches. The Monte-Carlo
//! variants draw posterior samples `mu + L z` from standard-normal base
//! samples `z`; fixing those samples turns the estimate into a deterministic
//! function of the batch, which lets quasi-Newton optimisers work on it.

mod analytic;
mod monte_carlo;
pub mod normal;
mod spec;

pub use analytic::{ei, ei_with_gradient, expected_improvement, ucb, ucb_with_gradient, upper_confidence_bound};
pub use monte_carlo::{mc_ei, mc_ei_from_posterior, mc_ucb, mc_ucb_from_posterior, Acquisition};
pub use spec::{with_pending, AcquisitionKind, AcquisitionSpec, DEFAULT_MC_SAMPLES, SIGMA_FLOOR};
