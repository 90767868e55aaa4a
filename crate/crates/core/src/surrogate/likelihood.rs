use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::cholesky_with_jitter;

use super::gp::{GpModel, MeanKind};
use super::kernel::scaled_sq_dist;

/// Offset inside the noise log-transform, `theta = ln(noise + eps)`.
pub const NOISE_EPSILON: f64 = 1e-8;

impl GpModel {
    /// Number of unconstrained hyperparameters optimised by `fit`.
    pub fn num_free_parameters(&self) -> usize {
        let mean = usize::from(self.mean_kind == MeanKind::Constant);
        let ls = if self.ard { self.dims() } else { 1 };
        mean + 1 + ls + usize::from(self.hyper.learn_noise)
    }

    /// Unconstrained parameter vector: `[c?, ln sf2, ln l.., ln(noise + eps)?]`.
    pub fn free_parameters(&self) -> Vec<f64> {
        let h = &self.hyper;
        let mut theta = Vec::with_capacity(self.num_free_parameters());
        if self.mean_kind == MeanKind::Constant {
            theta.push(h.mean_constant);
        }
        theta.push(h.signal_variance.ln());
        if self.ard {
            theta.extend(h.lengthscales.iter().map(|l| l.ln()));
        } else {
            theta.push(h.lengthscales[0].ln());
        }
        if h.learn_noise {
            theta.push((h.noise_variance + NOISE_EPSILON).ln());
        }
        theta
    }

    /// Inverse of [`GpModel::free_parameters`].
    pub fn with_free_parameters(&self, theta: &[f64]) -> Result<GpModel> {
        if theta.len() != self.num_free_parameters() {
            return Err(Error::Parameter(format!(
                "expected {} free parameters, got {}",
                self.num_free_parameters(),
                theta.len()
            )));
        }
        let mut out = self.clone();
        let mut it = theta.iter().copied();
        if self.mean_kind == MeanKind::Constant {
            out.hyper.mean_constant = it.next().unwrap();
        }
        out.hyper.signal_variance = it.next().unwrap().exp();
        if self.ard {
            for l in out.hyper.lengthscales.iter_mut() {
                *l = it.next().unwrap().exp();
            }
        } else {
            let l = it.next().unwrap().exp();
            out.hyper.lengthscales.iter_mut().for_each(|v| *v = l);
        }
        if self.hyper.learn_noise {
            out.hyper.noise_variance = (it.next().unwrap().exp() - NOISE_EPSILON).max(0.0);
        }
        out.hyper.validate()?;
        Ok(out)
    }

    /// Exact log-marginal likelihood of the training outputs.
    pub fn log_marginal_likelihood(&self) -> Result<f64> {
        if self.data.is_empty() {
            return Err(Error::Parameter("likelihood needs at least one training point".into()));
        }
        self.hyper.validate()?;
        let a = self.training_covariance();
        let chol = cholesky_with_jitter(&a, self.hyper.signal_variance)?;
        let r = self.residuals();
        let z = chol.solve_lower(&r);
        let n = r.len() as f64;
        Ok(-0.5 * z.norm_squared() - 0.5 * chol.log_det() - 0.5 * n * (2.0 * PI).ln())
    }

    /// Log-marginal likelihood and its analytic gradient with respect to
    /// [`GpModel::free_parameters`].
    pub fn log_marginal_likelihood_with_gradient(&self) -> Result<(f64, Vec<f64>)> {
        if self.data.is_empty() {
            return Err(Error::Parameter("likelihood needs at least one training point".into()));
        }
        self.hyper.validate()?;
        let h = &self.hyper;
        let x = self.data.inputs();
        let n = x.nrows();
        let d = x.ncols();
        let rows: Vec<Vec<f64>> = x.row_iter().map(|r| r.iter().copied().collect()).collect();

        // kernel part and dk/dr2 per pair
        let mut k = DMatrix::zeros(n, n);
        let mut slope = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let (c, s) =
                    self.kernel_kind
                        .correlation_and_slope(scaled_sq_dist(&rows[i], &rows[j], &h.lengthscales));
                k[(i, j)] = h.signal_variance * c;
                k[(j, i)] = k[(i, j)];
                slope[(i, j)] = h.signal_variance * s;
                slope[(j, i)] = slope[(i, j)];
            }
        }
        let mut a = k.clone();
        for (i, s) in self.noise_diagonal().iter().enumerate() {
            a[(i, i)] += s;
        }
        let chol = cholesky_with_jitter(&a, h.signal_variance)?;
        let r = self.residuals();
        let alpha = chol.solve(&r);
        let lml = -0.5 * r.dot(&alpha) - 0.5 * chol.log_det() - 0.5 * n as f64 * (2.0 * PI).ln();

        // dLML/dtheta = 1/2 tr((alpha alpha^T - A^-1) dA/dtheta)
        let m = &alpha * alpha.transpose() - chol.inverse();
        let mut grad = Vec::with_capacity(self.num_free_parameters());
        if self.mean_kind == MeanKind::Constant {
            grad.push(alpha.sum());
        }
        grad.push(0.5 * m.component_mul(&k).sum());
        let mut per_dim = vec![0.0; d];
        for i in 0..n {
            for j in 0..i {
                let w = m[(i, j)] * slope[(i, j)];
                if w == 0.0 {
                    continue;
                }
                for (c, acc) in per_dim.iter_mut().enumerate() {
                    let t = (rows[i][c] - rows[j][c]) / h.lengthscales[c];
                    // both (i, j) and (j, i) contribute; 1/2 * 2 * (-2)
                    *acc += -2.0 * w * t * t;
                }
            }
        }
        if self.ard {
            grad.extend(per_dim);
        } else {
            grad.push(per_dim.iter().sum());
        }
        if h.learn_noise {
            let scale = if h.noise_variance > 0.0 {
                h.noise_variance + NOISE_EPSILON
            } else {
                0.0
            };
            grad.push(0.5 * m.trace() * scale);
        }
        Ok((lml, grad))
    }
}
