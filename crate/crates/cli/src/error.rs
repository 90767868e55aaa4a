use std::path::PathBuf;

use bayesopt::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("{0}")]
    Usage(String),

    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),

    #[error("campaign is locked by another invocation ({}); remove the file if no other process is running", .0.display())]
    Locked(PathBuf),

    #[error("{}: {source}", .path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }

    /// 2 for invalid input, 3 for budget and feasibility failures, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Csv(_) => 2,
            CliError::Core(e) => match e {
                CoreError::Budget { .. } | CoreError::Infeasible(_) | CoreError::CombinatorialExplosion { .. } => 3,
                CoreError::Domain(_)
                | CoreError::InvalidHyperparameter(_)
                | CoreError::Parameter(_)
                | CoreError::BaseSamples { .. }
                | CoreError::Ordering(_)
                | CoreError::UnmatchedCandidate(_)
                | CoreError::SchemaVersion { .. }
                | CoreError::Persistence(_)
                | CoreError::Json(_) => 2,
                _ => 1,
            },
            CliError::Locked(_) | CliError::Io { .. } => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
