//! Gaussian-process Bayesian optimisation: surrogate models, acquisition
//! functions, inner optimisers, space-filling designs, synthetic test
//! functions and a persistent ask/tell campaign.

pub mod acquisition;
pub mod campaign;
pub mod design;
pub mod error;
pub mod linalg;
pub mod optimise;
pub mod surrogate;
pub mod testfuncs;

pub use error::{Error, Result};
