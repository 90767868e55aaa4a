use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::surrogate::ConditionedGp;

use super::normal;
use super::SIGMA_FLOOR;

/// Closed-form expected improvement for a Gaussian with mean `mu` and
/// standard deviation `sigma`.
pub fn expected_improvement(mu: f64, sigma: f64, y_best: f64) -> f64 {
    ei_parts(mu, sigma * sigma, y_best).0
}

/// `mu + sqrt(beta) * sigma`.
pub fn upper_confidence_bound(mu: f64, sigma: f64, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    Ok(mu + beta.sqrt() * sigma)
}

fn check_beta(beta: f64) -> Result<()> {
    if beta >= 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!("beta {beta} must be non-negative")))
    }
}

/// EI value with partial derivatives with respect to the mean and variance.
fn ei_parts(mu: f64, var: f64, y_best: f64) -> (f64, f64, f64) {
    let sigma = var.max(0.0).sqrt();
    let diff = mu - y_best;
    if sigma < SIGMA_FLOOR {
        return if diff > 0.0 { (diff, 1.0, 0.0) } else { (0.0, 0.0, 0.0) };
    }
    let z = diff / sigma;
    let cdf = normal::cdf(z);
    let pdf = normal::pdf(z);
    let value = (diff * cdf + sigma * pdf).max(0.0);
    (value, cdf, pdf / (2.0 * sigma))
}

fn ucb_parts(mu: f64, var: f64, beta: f64) -> (f64, f64, f64) {
    let sigma = var.max(0.0).sqrt();
    let rb = beta.sqrt();
    let dvar = if sigma < SIGMA_FLOOR { 0.0 } else { rb / (2.0 * sigma) };
    (mu + rb * sigma, 1.0, dvar)
}

fn single_point(
    gp: &ConditionedGp,
    x: &[f64],
    parts: impl Fn(f64, f64) -> (f64, f64, f64),
    grad: bool,
) -> Result<(f64, Vec<f64>)> {
    let xm = DMatrix::from_row_slice(1, x.len(), x);
    let joint = gp.joint(&xm)?;
    let (mu, var) = (joint.mean[0], joint.cov[(0, 0)]);
    if !mu.is_finite() || !var.is_finite() {
        return Err(Error::Domain("posterior moments are not finite".into()));
    }
    let (value, dmu, dvar) = parts(mu, var);
    if !grad {
        return Ok((value, Vec::new()));
    }
    let g = gp.backprop(
        &joint,
        &DVector::from_element(1, dmu),
        &DMatrix::from_element(1, 1, dvar),
    );
    Ok((value, g.row(0).iter().copied().collect()))
}

/// Expected improvement over `y_best` at a single point.
pub fn ei(gp: &ConditionedGp, x: &[f64], y_best: f64) -> Result<f64> {
    Ok(single_point(gp, x, |m, v| ei_parts(m, v, y_best), false)?.0)
}

pub fn ei_with_gradient(gp: &ConditionedGp, x: &[f64], y_best: f64) -> Result<(f64, Vec<f64>)> {
    single_point(gp, x, |m, v| ei_parts(m, v, y_best), true)
}

/// Upper confidence bound at a single point.
pub fn ucb(gp: &ConditionedGp, x: &[f64], beta: f64) -> Result<f64> {
    check_beta(beta)?;
    Ok(single_point(gp, x, |m, v| ucb_parts(m, v, beta), false)?.0)
}

pub fn ucb_with_gradient(gp: &ConditionedGp, x: &[f64], beta: f64) -> Result<(f64, Vec<f64>)> {
    check_beta(beta)?;
    single_point(gp, x, |m, v| ucb_parts(m, v, beta), true)
}
