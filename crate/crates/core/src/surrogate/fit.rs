use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimise::Adam;

use super::gp::{GpModel, MeanKind};

/// Settings for maximum-likelihood hyperparameter fitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitOptions {
    pub lr: f64,
    pub steps: usize,
    /// Number of initialisations; extra ones perturb the log-lengthscales.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            lr: 0.1,
            steps: 200,
            restarts: 1,
            seed: 0,
        }
    }
}

impl GpModel {
    /// Maximises the log-marginal likelihood with Adam over the
    /// log-reparameterised hyperparameters and returns the best iterate seen.
    pub fn fit(&self, opts: &FitOptions) -> Result<GpModel> {
        if !(opts.lr > 0.0 && opts.lr.is_finite()) {
            return Err(Error::Parameter(format!("learning rate {} must be positive", opts.lr)));
        }
        if opts.steps == 0 {
            return Err(Error::Parameter("fit needs at least one step".into()));
        }
        let theta0 = self.free_parameters();
        let start = self
            .log_marginal_likelihood_with_gradient()
            .map_err(|e| Error::Initialisation(e.to_string()))?;
        if !start.0.is_finite() || start.1.iter().any(|g| !g.is_finite()) {
            return Err(Error::Initialisation(format!("log-likelihood {}", start.0)));
        }

        let (mut best_theta, mut best_lml) = self.adam_ascent(theta0.clone(), start, opts);

        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let offset = usize::from(self.mean_kind == MeanKind::Constant) + 1;
        let n_ls = if self.ard { self.dims() } else { 1 };
        for _ in 1..opts.restarts.max(1) {
            let mut theta = theta0.clone();
            for t in theta.iter_mut().skip(offset).take(n_ls) {
                let z: f64 = StandardNormal.sample(&mut rng);
                *t += z;
            }
            let Ok(start) = self
                .with_free_parameters(&theta)
                .and_then(|m| m.log_marginal_likelihood_with_gradient())
            else {
                continue;
            };
            if !start.0.is_finite() {
                continue;
            }
            let (t, v) = self.adam_ascent(theta, start, opts);
            if v > best_lml {
                best_lml = v;
                best_theta = t;
            }
        }
        self.with_free_parameters(&best_theta)
    }

    fn adam_ascent(&self, mut theta: Vec<f64>, start: (f64, Vec<f64>), opts: &FitOptions) -> (Vec<f64>, f64) {
        let mut adam = Adam::new(opts.lr, theta.len());
        let mut best = (theta.clone(), start.0);
        let mut grad = start.1;
        for _ in 0..opts.steps {
            let descent: Vec<f64> = grad.iter().map(|g| -g).collect();
            adam.step(&mut theta, &descent);
            let eval = self
                .with_free_parameters(&theta)
                .and_then(|m| m.log_marginal_likelihood_with_gradient());
            match eval {
                Ok((lml, g)) if lml.is_finite() && g.iter().all(|v| v.is_finite()) => {
                    if lml > best.1 {
                        best = (theta.clone(), lml);
                    }
                    grad = g;
                }
                _ => break,
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surrogate::{Dataset, KernelKind};
    use nalgebra::{DMatrix, DVector};

    #[test]
    fn rejects_bad_options() {
        let data = Dataset::new(
            DMatrix::from_row_slice(2, 1, &[0.0, 1.0]),
            DVector::from_vec(vec![0.0, 1.0]),
        )
        .unwrap();
        let m = GpModel::new(data);
        assert!(m
            .fit(&FitOptions {
                lr: 0.0,
                ..Default::default()
            })
            .is_err());
        assert!(m
            .fit(&FitOptions {
                steps: 0,
                ..Default::default()
            })
            .is_err());
    }

    #[test]
    fn lml_never_decreases() {
        let x = DMatrix::from_fn(10, 2, |i, j| ((i * 7 + j * 3) % 10) as f64 / 10.0);
        let y = DVector::from_fn(10, |i, _| (x[(i, 0)] * 6.0).sin() + x[(i, 1)]);
        let m = GpModel::with_config(
            Dataset::new(x, y).unwrap(),
            MeanKind::Constant,
            KernelKind::Rbf,
            true,
            true,
        );
        let before = m.log_marginal_likelihood().unwrap();
        let fitted = m
            .fit(&FitOptions {
                steps: 50,
                restarts: 3,
                ..Default::default()
            })
            .unwrap();
        assert!(fitted.log_marginal_likelihood().unwrap() >= before);
    }

    #[test]
    fn huge_outputs_fail_initialisation() {
        let x = DMatrix::from_row_slice(2, 1, &[0.0, 0.0]);
        let y = DVector::from_vec(vec![1e200, -1e200]);
        let mut m = GpModel::with_config(
            Dataset::new(x, y).unwrap(),
            MeanKind::Constant,
            KernelKind::Rbf,
            true,
            false,
        );
        m.hyper.signal_variance = 1.0;
        assert!(matches!(m.fit(&FitOptions::default()), Err(Error::Initialisation(_))));
    }
}
