use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_ENUMERATION_CAP: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OptimiserMethod {
    #[default]
    BoundedDeterministic,
    ConstrainedDeterministic,
    Stochastic,
}

/// Settings shared by the candidate-selection strategies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimiserConfig {
    pub method: OptimiserMethod,
    pub lr: f64,
    pub steps: usize,
    pub num_starts: usize,
    pub num_samples: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub enumeration_cap: usize,
}

impl Default for OptimiserConfig {
    fn default() -> Self {
        Self {
            method: OptimiserMethod::BoundedDeterministic,
            lr: 0.1,
            steps: 100,
            num_starts: 10,
            num_samples: 100,
            batch_size: 1,
            seed: 0,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
        }
    }
}

impl OptimiserConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_starts == 0 || self.num_starts > self.num_samples {
            return Err(Error::Parameter(format!(
                "need 1 <= num_starts ({}) <= num_samples ({})",
                self.num_starts, self.num_samples
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Parameter("batch_size must be at least 1".into()));
        }
        if !(self.lr.is_finite() && self.lr >= 0.0) {
            return Err(Error::Parameter(format!(
                "learning rate {} must be finite and non-negative",
                self.lr
            )));
        }
        if self.enumeration_cap == 0 {
            return Err(Error::Parameter("enumeration_cap must be at least 1".into()));
        }
        Ok(())
    }
}
