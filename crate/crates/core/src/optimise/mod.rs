//! Inner optimisers and candidate-selection strategies.

mod adam;
mod config;
mod local;
mod objective;
mod space;
mod strategy;

pub use adam::Adam;
pub use config::{OptimiserConfig, OptimiserMethod, DEFAULT_ENUMERATION_CAP};
pub use local::{
    bounded_maximise, bounded_maximise_with, constrained_maximise, stochastic_maximise, LbfgsbOptions, LocalResult,
    FEASIBILITY_TOL,
};
pub use objective::{FnObjective, Objective, Restricted};
pub use space::{
    Bounds, Constraint, ConstraintCallable, ConstraintFn, ConstraintKind, InputSpace, LinearConstraintRecord,
};
pub use strategy::{
    multi_joint, multi_sequential, multistart_candidates, optimise_mixed, single, AcquisitionObjective, Candidates,
    ContinuousOptimiser,
};
