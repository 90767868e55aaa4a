//! Ask/tell campaigns, the closed optimisation loop and baseline comparisons.

mod config;
mod runner;
mod session;
mod state;

pub use config::{case_study_space, AcquisitionSettings, CampaignConfig, ModelSettings, Strategy};
pub use runner::{
    benchmark_compare, cumulative_best, quantile, resume_loop, resume_test_function, run_loop, run_test_function,
    BenchmarkMethod, Comparison, SummaryRow, Trace,
};
pub use session::{ask, best, derive_seed, initial_candidate_designs, initialise, tell, MATCH_TOL};
pub use state::{
    space_from_json, space_to_json, CampaignState, EvaluationRecord, PendingPoint, Source, SCHEMA_VERSION,
};
