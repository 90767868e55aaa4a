use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::GpHyperparameters;

const SQRT5: f64 = 2.23606797749979;

/// Stationary covariance families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Rbf,
    Matern52,
}

impl KernelKind {
    /// Unit-variance correlation as a function of the squared scaled distance.
    #[inline]
    pub(crate) fn correlation(self, r2: f64) -> f64 {
        match self {
            KernelKind::Rbf => (-0.5 * r2).exp(),
            KernelKind::Matern52 => {
                let r = r2.sqrt();
                (1.0 + SQRT5 * r + 5.0 * r2 / 3.0) * (-SQRT5 * r).exp()
            }
        }
    }

    /// Correlation and its derivative with respect to `r2`.
    #[inline]
    pub(crate) fn correlation_and_slope(self, r2: f64) -> (f64, f64) {
        match self {
            KernelKind::Rbf => {
                let k = (-0.5 * r2).exp();
                (k, -0.5 * k)
            }
            KernelKind::Matern52 => {
                let r = r2.sqrt();
                let e = (-SQRT5 * r).exp();
                let k = (1.0 + SQRT5 * r + 5.0 * r2 / 3.0) * e;
                (k, -(5.0 / 6.0) * (1.0 + SQRT5 * r) * e)
            }
        }
    }
}

/// Squared lengthscale-normalised distance.
#[inline]
pub(crate) fn scaled_sq_dist(x: &[f64], x2: &[f64], lengthscales: &[f64]) -> f64 {
    x.iter()
        .zip(x2)
        .zip(lengthscales)
        .map(|((a, b), l)| {
            let t = (a - b) / l;
            t * t
        })
        .sum()
}

/// Evaluates the covariance between two points.
pub fn kernel_eval(kind: KernelKind, hyper: &GpHyperparameters, x: &[f64], x2: &[f64]) -> Result<f64> {
    let d = hyper.lengthscales.len();
    if x.len() != d || x2.len() != d {
        return Err(Error::Parameter(format!(
            "points of length {} and {} for {} lengthscales",
            x.len(),
            x2.len(),
            d
        )));
    }
    if x.iter().chain(x2).any(|v| !v.is_finite()) {
        return Err(Error::Domain("kernel input is not finite".into()));
    }
    hyper.validate()?;
    let r2 = scaled_sq_dist(x, x2, &hyper.lengthscales);
    Ok(hyper.signal_variance * kind.correlation(r2))
}
