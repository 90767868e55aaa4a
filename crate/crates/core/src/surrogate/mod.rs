//! Gaussian-process regression surrogate.
//!
//! A [`GpModel`] bundles a prior (constant or zero mean, RBF or Matérn 5/2
//! covariance with optional ARD lengthscales) with its training [`Dataset`].
//! Conditioning on the data yields a [`ConditionedGp`] that caches the
//! Cholesky factor of the training covariance and answers posterior queries.

mod dataset;
mod fit;
mod gp;
mod kernel;
mod likelihood;

pub use dataset::Dataset;
pub use fit::FitOptions;
pub use gp::{ConditionedGp, GpHyperparameters, GpModel, MeanKind, PosteriorDistribution};
pub use kernel::{kernel_eval, KernelKind};
pub use likelihood::NOISE_EPSILON;
