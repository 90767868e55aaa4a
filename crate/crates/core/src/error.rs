use thiserror::Error;

/// Errors produced anywhere in the optimisation stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),

    #[error("kernel matrix is ill-conditioned: Cholesky failed with jitter {jitter:e}")]
    IllConditioned { jitter: f64 },

    #[error("non-finite log-marginal likelihood at initialisation ({0}); try standardising the outputs")]
    Initialisation(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error(
        "base samples have shape {rows}x{cols} but {expected_cols} joint points need {expected_rows}x{expected_cols}"
    )]
    BaseSamples {
        rows: usize,
        cols: usize,
        expected_rows: usize,
        expected_cols: usize,
    },

    #[error("optimisation failed: {message} at x = {iterate:?}")]
    Optimisation { message: String, iterate: Vec<f64> },

    #[error("no feasible point found: {0}")]
    Infeasible(String),

    #[error("{combinations} discrete combinations exceed the enumeration cap of {cap}")]
    CombinatorialExplosion { combinations: usize, cap: usize },

    #[error("zero variance: {0}")]
    ZeroVariance(String),

    #[error("evaluation budget exhausted: {used} of {budget} evaluations used or pending")]
    Budget { used: usize, budget: usize },

    #[error("out-of-order call: {0}")]
    Ordering(String),

    #[error("told point {0:?} does not match any pending candidate")]
    UnmatchedCandidate(Vec<f64>),

    #[error("objective evaluation failed: {0}")]
    Objective(String),

    #[error("unreadable state file: expected schema version {expected}, found {}", .found.map_or("none".to_string(), |v| v.to_string()))]
    SchemaVersion { expected: u32, found: Option<u64> },

    #[error("cannot persist: {0}")]
    Persistence(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
