use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of Monte-Carlo samples when none is given.
pub const DEFAULT_MC_SAMPLES: usize = 512;

/// Below this posterior standard deviation EI uses its closed-form limit.
pub const SIGMA_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AcquisitionKind {
    Ei,
    Ucb,
    McEi,
    McUcb,
}

impl AcquisitionKind {
    pub fn is_monte_carlo(self) -> bool {
        matches!(self, AcquisitionKind::McEi | AcquisitionKind::McUcb)
    }
}

/// Configuration of an acquisition function.
#[derive(Debug, Clone, PartialEq)]
pub struct AcquisitionSpec {
    pub variant: AcquisitionKind,
    /// Exploration weight (UCB variants).
    pub beta: f64,
    /// Incumbent value (EI variants).
    pub y_best: f64,
    /// Monte-Carlo sample count.
    pub samples: usize,
    pub fix_base_samples: bool,
    /// Seed of the fixed base-sample stream; column `j` is drawn from stream `j`.
    pub base_seed: u64,
    /// Explicit base samples, `samples x (pending + batch)`.
    pub base_samples: Option<DMatrix<f64>>,
    pub x_pending: Option<DMatrix<f64>>,
}

impl AcquisitionSpec {
    fn base(variant: AcquisitionKind) -> Self {
        Self {
            variant,
            beta: 0.0,
            y_best: 0.0,
            samples: DEFAULT_MC_SAMPLES,
            fix_base_samples: false,
            base_seed: 0,
            base_samples: None,
            x_pending: None,
        }
    }

    pub fn ei(y_best: f64) -> Self {
        Self {
            y_best,
            ..Self::base(AcquisitionKind::Ei)
        }
    }

    pub fn ucb(beta: f64) -> Self {
        Self {
            beta,
            ..Self::base(AcquisitionKind::Ucb)
        }
    }

    pub fn mc_ei(y_best: f64) -> Self {
        Self {
            y_best,
            ..Self::base(AcquisitionKind::McEi)
        }
    }

    pub fn mc_ucb(beta: f64) -> Self {
        Self {
            beta,
            ..Self::base(AcquisitionKind::McUcb)
        }
    }

    pub fn with_samples(mut self, samples: usize) -> Self {
        self.samples = samples;
        self
    }

    /// Fixes the base samples to a deterministic stream.
    pub fn with_fixed_base_samples(mut self, seed: u64) -> Self {
        self.fix_base_samples = true;
        self.base_seed = seed;
        self
    }

    /// Supplies the base samples explicitly; implies fixed base samples.
    pub fn with_base_samples(mut self, z: DMatrix<f64>) -> Self {
        self.samples = z.nrows();
        self.fix_base_samples = true;
        self.base_samples = Some(z);
        self
    }

    /// Replaces the pending points (see [`with_pending`]).
    pub fn with_pending(&self, x_pending: &DMatrix<f64>) -> Result<Self> {
        with_pending(self, x_pending)
    }

    pub fn num_pending(&self) -> usize {
        self.x_pending.as_ref().map_or(0, |p| p.nrows())
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::Parameter("at least one Monte-Carlo sample is required".into()));
        }
        if matches!(self.variant, AcquisitionKind::Ucb | AcquisitionKind::McUcb)
            && !(self.beta >= 0.0 && self.beta.is_finite())
        {
            return Err(Error::Parameter(format!("beta {} must be non-negative", self.beta)));
        }
        if !self.y_best.is_finite() {
            return Err(Error::Parameter("y_best must be finite".into()));
        }
        Ok(())
    }
}

/// Returns a spec whose Monte-Carlo evaluations condition jointly on
/// `x_pending`. Pending points enter the per-sample maximum but are never
/// optimised. An empty matrix clears the pending set.
pub fn with_pending(spec: &AcquisitionSpec, x_pending: &DMatrix<f64>) -> Result<AcquisitionSpec> {
    if x_pending.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("pending points are not finite".into()));
    }
    let mut out = spec.clone();
    out.x_pending = if x_pending.nrows() == 0 {
        None
    } else {
        if let Some(p) = &spec.x_pending {
            if p.ncols() != x_pending.ncols() {
                return Err(Error::Parameter(format!(
                    "pending points have {} columns, expected {}",
                    x_pending.ncols(),
                    p.ncols()
                )));
            }
        }
        Some(x_pending.clone())
    };
    Ok(out)
}
