use serde::{Deserialize, Serialize};

use crate::acquisition::{AcquisitionKind, AcquisitionSpec, DEFAULT_MC_SAMPLES};
use crate::error::{Error, Result};
use crate::optimise::{Bounds, InputSpace, OptimiserConfig, OptimiserMethod};
use crate::surrogate::{FitOptions, KernelKind, MeanKind};

/// How each batch of candidates is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    #[default]
    Single,
    MultiJoint,
    MultiSequential,
}

/// Acquisition settings; the incumbent and pending points come from the
/// campaign state at ask time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AcquisitionSettings {
    pub variant: AcquisitionKind,
    pub beta: f64,
    pub samples: usize,
    pub fix_base_samples: bool,
}

impl Default for AcquisitionSettings {
    fn default() -> Self {
        Self {
            variant: AcquisitionKind::Ei,
            beta: 4.0,
            samples: DEFAULT_MC_SAMPLES,
            fix_base_samples: false,
        }
    }
}

impl AcquisitionSettings {
    pub(crate) fn to_spec(&self, y_best: f64, base_seed: u64) -> AcquisitionSpec {
        let spec = match self.variant {
            AcquisitionKind::Ei => AcquisitionSpec::ei(y_best),
            AcquisitionKind::Ucb => AcquisitionSpec::ucb(self.beta),
            AcquisitionKind::McEi => AcquisitionSpec::mc_ei(y_best),
            AcquisitionKind::McUcb => AcquisitionSpec::mc_ucb(self.beta),
        }
        .with_samples(self.samples);
        if self.fix_base_samples {
            spec.with_fixed_base_samples(base_seed)
        } else {
            spec
        }
    }
}

/// Surrogate model family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelSettings {
    pub kernel: KernelKind,
    pub mean: MeanKind,
    pub ard: bool,
}

impl Default for ModelSettings {
    fn default() -> Self {
        Self {
            kernel: KernelKind::Matern52,
            mean: MeanKind::Constant,
            ard: true,
        }
    }
}

/// Budget and settings of a campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub budget: usize,
    pub init_points: usize,
    #[serde(default)]
    pub acquisition: AcquisitionSettings,
    #[serde(default)]
    pub optimiser: OptimiserConfig,
    #[serde(default)]
    pub gp_fit: FitOptions,
    #[serde(default)]
    pub strategy: Strategy,
    #[serde(default)]
    pub model: ModelSettings,
    /// Start each fit from the previous fit's hyperparameters.
    #[serde(default)]
    pub warm_start: bool,
}

impl CampaignConfig {
    pub fn new(budget: usize, init_points: usize) -> Self {
        Self {
            budget,
            init_points,
            acquisition: AcquisitionSettings::default(),
            optimiser: OptimiserConfig::default(),
            gp_fit: FitOptions::default(),
            strategy: Strategy::default(),
            model: ModelSettings::default(),
            warm_start: false,
        }
    }

    /// Hartmann6D demonstration: 30 initial points, ten sequential batches
    /// of four under MC-UCB with the stochastic optimiser.
    pub fn case_study() -> Self {
        Self {
            acquisition: AcquisitionSettings {
                variant: AcquisitionKind::McUcb,
                beta: 4.0,
                samples: 128,
                fix_base_samples: false,
            },
            optimiser: OptimiserConfig {
                method: OptimiserMethod::Stochastic,
                lr: 0.1,
                steps: 200,
                num_starts: 2,
                num_samples: 100,
                batch_size: 4,
                ..OptimiserConfig::default()
            },
            gp_fit: FitOptions {
                lr: 0.1,
                steps: 200,
                ..FitOptions::default()
            },
            strategy: Strategy::MultiSequential,
            ..Self::new(70, 30)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.init_points == 0 {
            return Err(Error::Parameter("init_points must be at least 1".into()));
        }
        if self.budget < self.init_points {
            return Err(Error::Parameter(format!(
                "budget {} is smaller than init_points {}",
                self.budget, self.init_points
            )));
        }
        self.optimiser.validate()?;
        let a = &self.acquisition;
        if a.samples == 0 {
            return Err(Error::Parameter("acquisition needs at least one sample".into()));
        }
        if !(a.beta.is_finite() && a.beta >= 0.0) {
            return Err(Error::Parameter(format!(
                "beta {} must be finite and non-negative",
                a.beta
            )));
        }
        if self.strategy != Strategy::Single && !a.variant.is_monte_carlo() {
            return Err(Error::Parameter(
                "batch strategies need a Monte-Carlo acquisition".into(),
            ));
        }
        if a.variant.is_monte_carlo() && !a.fix_base_samples && self.optimiser.method != OptimiserMethod::Stochastic {
            return Err(Error::Parameter(
                "Monte-Carlo acquisitions need fixed base samples unless the optimiser is stochastic".into(),
            ));
        }
        if !(self.gp_fit.lr > 0.0 && self.gp_fit.lr.is_finite()) || self.gp_fit.steps == 0 {
            return Err(Error::Parameter(
                "gp_fit needs a positive learning rate and at least one step".into(),
            ));
        }
        Ok(())
    }

    /// Number of candidates one ask requests before budget clipping.
    pub fn batch_size(&self) -> usize {
        match self.strategy {
            Strategy::Single => 1,
            _ => self.optimiser.batch_size,
        }
    }
}

/// The six-dimensional unit cube with the first input restricted to
/// multiples of 0.1.
pub fn case_study_space() -> InputSpace {
    InputSpace::new(Bounds::unit(6))
        .with_discrete(0, (0..=10).map(|i| i as f64 / 10.0).collect())
        .expect("static space is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let c: CampaignConfig = serde_json::from_str(r#"{"budget": 20, "init_points": 5}"#).unwrap();
        assert_eq!(c, CampaignConfig::new(20, 5));
        assert_eq!(c.optimiser.num_starts, 10);
        assert_eq!(c.optimiser.num_samples, 100);
        assert_eq!(c.optimiser.lr, 0.1);
        assert_eq!(c.optimiser.steps, 100);
        assert_eq!(c.acquisition.samples, 512);
        c.validate().unwrap();
    }

    #[test]
    fn case_study_is_valid() {
        let c = CampaignConfig::case_study();
        c.validate().unwrap();
        assert_eq!(c.batch_size(), 4);
        assert_eq!((c.budget - c.init_points) / c.batch_size(), 10);
        assert_eq!(case_study_space().discrete()[&0][3], 0.3);
    }

    #[test]
    fn invalid_configs() {
        assert!(CampaignConfig::new(5, 0).validate().is_err());
        assert!(CampaignConfig::new(4, 5).validate().is_err());
        let mut c = CampaignConfig::new(10, 5);
        c.strategy = Strategy::MultiJoint;
        assert!(c.validate().is_err());
    }
}
