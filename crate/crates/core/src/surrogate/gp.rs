use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky_with_jitter, JitteredCholesky};

use super::kernel::{scaled_sq_dist, KernelKind};
use super::Dataset;

/// Prior mean family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanKind {
    Zero,
    Constant,
}

/// GP hyperparameters in natural (constrained) units.
#[derive(Debug, Clone, PartialEq)]
pub struct GpHyperparameters {
    pub mean_constant: f64,
    pub signal_variance: f64,
    pub lengthscales: Vec<f64>,
    /// Learned homoscedastic noise, added on top of any fixed noise.
    pub noise_variance: f64,
    pub learn_noise: bool,
}

impl GpHyperparameters {
    pub fn isotropic(dims: usize, signal_variance: f64, lengthscale: f64) -> Self {
        Self {
            mean_constant: 0.0,
            signal_variance,
            lengthscales: vec![lengthscale; dims],
            noise_variance: 0.0,
            learn_noise: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.signal_variance.is_finite() && self.signal_variance > 0.0) {
            return Err(Error::InvalidHyperparameter(format!(
                "signal variance {} must be positive",
                self.signal_variance
            )));
        }
        if let Some(l) = self.lengthscales.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(Error::InvalidHyperparameter(format!(
                "lengthscale {l} must be positive"
            )));
        }
        if !(self.noise_variance.is_finite() && self.noise_variance >= 0.0) {
            return Err(Error::InvalidHyperparameter(format!(
                "noise variance {} must be non-negative",
                self.noise_variance
            )));
        }
        if !self.mean_constant.is_finite() {
            return Err(Error::InvalidHyperparameter("mean constant is not finite".into()));
        }
        Ok(())
    }
}

/// A Gaussian-process prior bound to a training set.
#[derive(Debug, Clone)]
pub struct GpModel {
    pub mean_kind: MeanKind,
    pub kernel_kind: KernelKind,
    pub ard: bool,
    pub hyper: GpHyperparameters,
    pub data: Dataset,
}

impl GpModel {
    /// Constant mean, Matérn 5/2 ARD kernel, initialised from the data.
    ///
    /// Noise is learned unless the dataset carries fixed noise.
    pub fn new(data: Dataset) -> Self {
        let learn_noise = data.fixed_noise().is_none();
        Self::with_config(data, MeanKind::Constant, KernelKind::Matern52, true, learn_noise)
    }

    /// Builds a model with the standard initial hyperparameters: mean
    /// constant at the output mean, signal variance at the output variance,
    /// unit lengthscales and learned noise at 1% of the output variance.
    pub fn with_config(
        data: Dataset,
        mean_kind: MeanKind,
        kernel_kind: KernelKind,
        ard: bool,
        learn_noise: bool,
    ) -> Self {
        let y = data.outputs();
        let n = y.len();
        let mean = if n > 0 { y.mean() } else { 0.0 };
        let var = if n > 1 {
            y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        let var = if var.is_finite() && var > 1e-12 { var } else { 1.0 };
        let hyper = GpHyperparameters {
            mean_constant: match mean_kind {
                MeanKind::Zero => 0.0,
                MeanKind::Constant => mean,
            },
            signal_variance: var,
            lengthscales: vec![1.0; data.dims()],
            noise_variance: if learn_noise { 1e-2 * var } else { 0.0 },
            learn_noise,
        };
        Self {
            mean_kind,
            kernel_kind,
            ard,
            hyper,
            data,
        }
    }

    pub fn with_hyperparameters(mut self, hyper: GpHyperparameters) -> Result<Self> {
        hyper.validate()?;
        if hyper.lengthscales.len() != self.data.dims() {
            return Err(Error::Parameter(format!(
                "{} lengthscales for {} input dimensions",
                hyper.lengthscales.len(),
                self.data.dims()
            )));
        }
        if !self.ard && hyper.lengthscales.iter().any(|l| *l != hyper.lengthscales[0]) {
            return Err(Error::InvalidHyperparameter(
                "lengthscales must be tied when ARD is disabled".into(),
            ));
        }
        self.hyper = hyper;
        Ok(self)
    }

    pub fn dims(&self) -> usize {
        self.data.dims()
    }

    pub fn prior_mean(&self) -> f64 {
        match self.mean_kind {
            MeanKind::Zero => 0.0,
            MeanKind::Constant => self.hyper.mean_constant,
        }
    }

    /// Cross-covariance matrix between the rows of `a` and `b`.
    pub fn kernel_matrix(&self, a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
        let ls = &self.hyper.lengthscales;
        let ra: Vec<Vec<f64>> = a.row_iter().map(|r| r.iter().copied().collect()).collect();
        let rb: Vec<Vec<f64>> = b.row_iter().map(|r| r.iter().copied().collect()).collect();
        DMatrix::from_fn(a.nrows(), b.nrows(), |i, j| {
            self.hyper.signal_variance * self.kernel_kind.correlation(scaled_sq_dist(&ra[i], &rb[j], ls))
        })
    }

    /// Diagonal observation-noise variances of the training points.
    pub fn noise_diagonal(&self) -> DVector<f64> {
        let n = self.data.len();
        match self.data.fixed_noise() {
            Some(f) => f.add_scalar(self.hyper.noise_variance),
            None => DVector::from_element(n, self.hyper.noise_variance),
        }
    }

    /// Training covariance `K(X, X) + noise`.
    pub(crate) fn training_covariance(&self) -> DMatrix<f64> {
        let x = self.data.inputs();
        let mut k = self.kernel_matrix(x, x);
        for (i, s) in self.noise_diagonal().iter().enumerate() {
            k[(i, i)] += s;
        }
        k
    }

    pub(crate) fn residuals(&self) -> DVector<f64> {
        self.data.outputs().add_scalar(-self.prior_mean())
    }

    /// Factorises the training covariance and caches the weights used by
    /// every posterior query.
    pub fn condition(&self) -> Result<ConditionedGp> {
        if self.data.is_empty() {
            return Err(Error::Parameter("posterior needs at least one training point".into()));
        }
        self.hyper.validate()?;
        let a = self.training_covariance();
        let chol = cholesky_with_jitter(&a, self.hyper.signal_variance)?;
        let alpha = chol.solve(&self.residuals());
        let train_rows = self
            .data
            .inputs()
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect();
        Ok(ConditionedGp {
            model: self.clone(),
            chol,
            alpha,
            train_rows,
        })
    }

    pub fn posterior(&self, x_test: &DMatrix<f64>) -> Result<PosteriorDistribution> {
        self.condition()?.posterior(x_test)
    }
}

/// Multivariate normal posterior at a set of test points.
#[derive(Debug, Clone)]
pub struct PosteriorDistribution {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
    /// Lower factor with `chol_factor * chol_factor^T = covariance + jitter I`.
    pub chol_factor: DMatrix<f64>,
    pub jitter: f64,
}

/// A GP conditioned on its training data.
#[derive(Debug, Clone)]
pub struct ConditionedGp {
    model: GpModel,
    chol: JitteredCholesky,
    alpha: DVector<f64>,
    train_rows: Vec<Vec<f64>>,
}

impl ConditionedGp {
    pub fn model(&self) -> &GpModel {
        &self.model
    }

    pub fn dims(&self) -> usize {
        self.model.dims()
    }

    /// Jitter that was needed to factorise the training covariance.
    pub fn training_jitter(&self) -> f64 {
        self.chol.jitter
    }

    pub fn posterior(&self, x_test: &DMatrix<f64>) -> Result<PosteriorDistribution> {
        let joint = self.joint(x_test)?;
        let chol = joint.factor(self.model.hyper.signal_variance)?;
        Ok(PosteriorDistribution {
            mean: joint.mean,
            covariance: joint.cov,
            chol_factor: chol.l,
            jitter: chol.jitter,
        })
    }

    /// Posterior mean and variance at a single point.
    pub fn predict(&self, x: &[f64]) -> Result<(f64, f64)> {
        let joint = self.joint(&DMatrix::from_row_slice(1, x.len(), x))?;
        Ok((joint.mean[0], joint.cov[(0, 0)]))
    }

    /// Posterior moments with the intermediate quantities needed for
    /// reverse-mode gradients with respect to the test inputs.
    pub(crate) fn joint(&self, x_test: &DMatrix<f64>) -> Result<JointPosterior> {
        let d = self.dims();
        if x_test.ncols() != d {
            return Err(Error::Parameter(format!(
                "test points have {} columns, model has {d}",
                x_test.ncols()
            )));
        }
        if x_test.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("test inputs are not finite".into()));
        }
        let model = &self.model;
        let m = x_test.nrows();
        let rows: Vec<Vec<f64>> = x_test.row_iter().map(|r| r.iter().copied().collect()).collect();
        let ls = &model.hyper.lengthscales;
        let sf = model.hyper.signal_variance;
        let kind = model.kernel_kind;
        let n = self.train_rows.len();
        let k_cross = DMatrix::from_fn(m, n, |i, j| {
            sf * kind.correlation(scaled_sq_dist(&rows[i], &self.train_rows[j], ls))
        });
        let k_star = DMatrix::from_fn(m, m, |i, j| {
            sf * kind.correlation(scaled_sq_dist(&rows[i], &rows[j], ls))
        });
        let w = self.chol.solve_matrix(&k_cross.transpose());
        let mean = (&k_cross * &self.alpha).add_scalar(model.prior_mean());
        let mut cov = k_star - &k_cross * &w;
        cov = (&cov + cov.transpose()) * 0.5;
        for i in 0..m {
            if cov[(i, i)] < 0.0 {
                cov[(i, i)] = 0.0;
            }
        }
        Ok(JointPosterior {
            rows,
            k_cross,
            w,
            mean,
            cov,
        })
    }

    /// Gradient of `dJ = mean_bar . dmean + sum(cov_bar .* dcov)` with respect
    /// to the test inputs (one row per test point).
    pub(crate) fn backprop(
        &self,
        joint: &JointPosterior,
        mean_bar: &DVector<f64>,
        cov_bar: &DMatrix<f64>,
    ) -> DMatrix<f64> {
        let model = &self.model;
        let ls = &model.hyper.lengthscales;
        let sf = model.hyper.signal_variance;
        let kind = model.kernel_kind;
        let m = joint.rows.len();
        let d = ls.len();
        let inv_l2: Vec<f64> = ls.iter().map(|l| 1.0 / (l * l)).collect();

        // dJ/dK(X*, X) = mean_bar alpha^T - 2 cov_bar W^T
        let k_cross_bar = mean_bar * self.alpha.transpose() - (cov_bar * joint.w.transpose()) * 2.0;

        let mut grad = DMatrix::zeros(m, d);
        for a in 0..m {
            let xa = &joint.rows[a];
            for (t, xt) in self.train_rows.iter().enumerate() {
                let coeff = k_cross_bar[(a, t)];
                if coeff == 0.0 {
                    continue;
                }
                let (_, slope) = kind.correlation_and_slope(scaled_sq_dist(xa, xt, ls));
                let s = coeff * sf * slope * 2.0;
                for c in 0..d {
                    grad[(a, c)] += s * (xa[c] - xt[c]) * inv_l2[c];
                }
            }
            for b in 0..m {
                if b == a {
                    continue;
                }
                let coeff = 2.0 * cov_bar[(a, b)];
                if coeff == 0.0 {
                    continue;
                }
                let xb = &joint.rows[b];
                let (_, slope) = kind.correlation_and_slope(scaled_sq_dist(xa, xb, ls));
                let s = coeff * sf * slope * 2.0;
                for c in 0..d {
                    grad[(a, c)] += s * (xa[c] - xb[c]) * inv_l2[c];
                }
            }
        }
        grad
    }
}

/// Joint posterior moments plus cached intermediates.
#[derive(Debug, Clone)]
pub(crate) struct JointPosterior {
    rows: Vec<Vec<f64>>,
    k_cross: DMatrix<f64>,
    /// `(K + noise)^-1 K(X, X*)`
    w: DMatrix<f64>,
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl JointPosterior {
    pub fn factor(&self, scale: f64) -> Result<JitteredCholesky> {
        cholesky_with_jitter(&self.cov, scale)
    }

    #[allow(dead_code)]
    pub fn len(&self) -> usize {
        self.k_cross.nrows()
    }
}
