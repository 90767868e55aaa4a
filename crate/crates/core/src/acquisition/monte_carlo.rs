use std::borrow::Cow;
use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::cholesky_backward;
use crate::surrogate::ConditionedGp;

use super::analytic::{ei_with_gradient, ucb_with_gradient};
use super::{AcquisitionKind, AcquisitionSpec};

#[derive(Debug, Clone, Copy)]
enum Reduction {
    /// `max_j ReLU(f_j - y_best)`
    Improvement { y_best: f64 },
    /// `max_j mu_j + scale * |f_j - mu_j|`
    Optimistic { scale: f64 },
}

impl Reduction {
    fn from_spec(spec: &AcquisitionSpec) -> Self {
        match spec.variant {
            AcquisitionKind::Ei | AcquisitionKind::McEi => Reduction::Improvement { y_best: spec.y_best },
            AcquisitionKind::Ucb | AcquisitionKind::McUcb => Reduction::Optimistic {
                scale: (spec.beta * PI / 2.0).sqrt(),
            },
        }
    }
}

/// Sample average of the per-sample maximum, with the adjoints of the mean
/// vector and of the lower Cholesky factor.
fn reduce(
    reduction: Reduction,
    mean: &DVector<f64>,
    l: &DMatrix<f64>,
    z: &DMatrix<f64>,
    grad: bool,
) -> (f64, DVector<f64>, DMatrix<f64>) {
    let m = mean.len();
    let s_count = z.nrows();
    let inv_s = 1.0 / s_count as f64;
    let mut mean_bar = DVector::zeros(m);
    let mut l_bar = DMatrix::zeros(m, m);
    // accumulate offsets from the first sample so constant samples average exactly
    let mut reference = None;
    let mut total = 0.0;
    let mut u = vec![0.0; m];
    for s in 0..s_count {
        for (j, uj) in u.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in 0..=j {
                acc += l[(j, k)] * z[(s, k)];
            }
            *uj = acc;
        }
        let mut best_j = 0;
        let mut best = f64::NEG_INFINITY;
        for j in 0..m {
            let v = match reduction {
                Reduction::Improvement { y_best } => (mean[j] + u[j] - y_best).max(0.0),
                Reduction::Optimistic { scale } => mean[j] + scale * u[j].abs(),
            };
            if v > best {
                best = v;
                best_j = j;
            }
        }
        let r = *reference.get_or_insert(best);
        total += best - r;
        if !grad {
            continue;
        }
        let du = match reduction {
            Reduction::Improvement { .. } => {
                if best > 0.0 {
                    1.0
                } else {
                    continue;
                }
            }
            Reduction::Optimistic { scale } => scale * u[best_j].signum() * f64::from(u[best_j] != 0.0),
        };
        mean_bar[best_j] += inv_s;
        if du != 0.0 {
            for k in 0..=best_j {
                l_bar[(best_j, k)] += du * z[(s, k)] * inv_s;
            }
        }
    }
    (reference.unwrap_or(0.0) + total * inv_s, mean_bar, l_bar)
}

fn check_samples(mean: &DVector<f64>, l: &DMatrix<f64>, z: &DMatrix<f64>) -> Result<()> {
    let m = mean.len();
    if l.nrows() != m || l.ncols() != m {
        return Err(Error::Parameter(format!(
            "factor is {}x{}, expected {m}x{m}",
            l.nrows(),
            l.ncols()
        )));
    }
    if z.ncols() != m || z.nrows() == 0 {
        return Err(Error::BaseSamples {
            rows: z.nrows(),
            cols: z.ncols(),
            expected_rows: z.nrows().max(1),
            expected_cols: m,
        });
    }
    Ok(())
}

/// Monte-Carlo EI from explicit posterior moments: samples are `mean + L z_s`
/// for each row `z_s` of `z`.
pub fn mc_ei_from_posterior(mean: &DVector<f64>, l: &DMatrix<f64>, z: &DMatrix<f64>, y_best: f64) -> Result<f64> {
    check_samples(mean, l, z)?;
    Ok(reduce(Reduction::Improvement { y_best }, mean, l, z, false).0)
}

/// Monte-Carlo UCB from explicit posterior moments.
pub fn mc_ucb_from_posterior(mean: &DVector<f64>, l: &DMatrix<f64>, z: &DMatrix<f64>, beta: f64) -> Result<f64> {
    check_samples(mean, l, z)?;
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::Parameter(format!("beta {beta} must be non-negative")));
    }
    Ok(reduce(
        Reduction::Optimistic {
            scale: (beta * PI / 2.0).sqrt(),
        },
        mean,
        l,
        z,
        false,
    )
    .0)
}

/// Deterministic base samples: column `j` is the `j`-th ChaCha stream of
/// `seed`, so growing the joint set appends columns and keeps earlier ones.
fn fixed_samples(seed: u64, samples: usize, cols: usize) -> DMatrix<f64> {
    let mut z = DMatrix::zeros(samples, cols);
    for j in 0..cols {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(j as u64);
        for s in 0..samples {
            z[(s, j)] = rng.sample(StandardNormal);
        }
    }
    z
}

fn fresh_samples<R: Rng + ?Sized>(rng: &mut R, samples: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(samples, cols, |_, _| rng.sample(StandardNormal))
}

fn stack_pending(spec: &AcquisitionSpec, x_batch: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    match &spec.x_pending {
        None => Ok(x_batch.clone()),
        Some(p) => {
            if p.ncols() != x_batch.ncols() {
                return Err(Error::Parameter(format!(
                    "pending points have {} columns, batch has {}",
                    p.ncols(),
                    x_batch.ncols()
                )));
            }
            let mut joint = DMatrix::zeros(p.nrows() + x_batch.nrows(), x_batch.ncols());
            joint.view_mut((0, 0), (p.nrows(), p.ncols())).copy_from(p);
            joint
                .view_mut((p.nrows(), 0), (x_batch.nrows(), x_batch.ncols()))
                .copy_from(x_batch);
            Ok(joint)
        }
    }
}

fn stored_samples(spec: &AcquisitionSpec, cols: usize) -> Result<Option<Cow<'_, DMatrix<f64>>>> {
    if let Some(z) = &spec.base_samples {
        if z.ncols() != cols || z.nrows() != spec.samples {
            return Err(Error::BaseSamples {
                rows: z.nrows(),
                cols: z.ncols(),
                expected_rows: spec.samples,
                expected_cols: cols,
            });
        }
        return Ok(Some(Cow::Borrowed(z)));
    }
    if spec.fix_base_samples {
        return Ok(Some(Cow::Owned(fixed_samples(spec.base_seed, spec.samples, cols))));
    }
    Ok(None)
}

fn resolve_samples<'a, R: Rng + ?Sized>(
    spec: &'a AcquisitionSpec,
    cols: usize,
    rng: &mut R,
) -> Result<Cow<'a, DMatrix<f64>>> {
    Ok(match stored_samples(spec, cols)? {
        Some(z) => z,
        None => Cow::Owned(fresh_samples(rng, spec.samples, cols)),
    })
}

fn evaluate_mc(
    gp: &ConditionedGp,
    spec: &AcquisitionSpec,
    x_batch: &DMatrix<f64>,
    z: &DMatrix<f64>,
    grad: bool,
) -> Result<(f64, Option<DMatrix<f64>>)> {
    let q = x_batch.nrows();
    if q == 0 {
        return Err(Error::Parameter("empty batch".into()));
    }
    let joint_x = stack_pending(spec, x_batch)?;
    let m = joint_x.nrows();
    if z.ncols() != m {
        return Err(Error::BaseSamples {
            rows: z.nrows(),
            cols: z.ncols(),
            expected_rows: spec.samples,
            expected_cols: m,
        });
    }
    let joint = gp.joint(&joint_x)?;
    let chol = joint.factor(gp.model().hyper.signal_variance)?;
    let (value, mean_bar, l_bar) = reduce(Reduction::from_spec(spec), &joint.mean, &chol.l, z, grad);
    if !value.is_finite() {
        return Err(Error::Domain("Monte-Carlo acquisition is not finite".into()));
    }
    if !grad {
        return Ok((value, None));
    }
    let cov_bar = cholesky_backward(&chol.l, &l_bar);
    let g = gp.backprop(&joint, &mean_bar, &cov_bar);
    let p = m - q;
    Ok((value, Some(g.rows(p, q).into_owned())))
}

/// Monte-Carlo expected improvement of a batch (rows of `x_batch`).
pub fn mc_ei<R: Rng + ?Sized>(
    gp: &ConditionedGp,
    x_batch: &DMatrix<f64>,
    spec: &AcquisitionSpec,
    rng: &mut R,
) -> Result<f64> {
    let spec = AcquisitionSpec {
        variant: AcquisitionKind::McEi,
        ..spec.clone()
    };
    spec.validate()?;
    let z = resolve_samples(&spec, x_batch.nrows() + spec.num_pending(), rng)?;
    Ok(evaluate_mc(gp, &spec, x_batch, &z, false)?.0)
}

/// Monte-Carlo upper confidence bound of a batch.
pub fn mc_ucb<R: Rng + ?Sized>(
    gp: &ConditionedGp,
    x_batch: &DMatrix<f64>,
    spec: &AcquisitionSpec,
    rng: &mut R,
) -> Result<f64> {
    let spec = AcquisitionSpec {
        variant: AcquisitionKind::McUcb,
        ..spec.clone()
    };
    spec.validate()?;
    let z = resolve_samples(&spec, x_batch.nrows() + spec.num_pending(), rng)?;
    Ok(evaluate_mc(gp, &spec, x_batch, &z, false)?.0)
}

/// An acquisition function bound to a conditioned GP.
#[derive(Debug, Clone)]
pub struct Acquisition {
    gp: Arc<ConditionedGp>,
    spec: AcquisitionSpec,
}

impl Acquisition {
    pub fn new(gp: Arc<ConditionedGp>, spec: AcquisitionSpec) -> Result<Self> {
        spec.validate()?;
        if let Some(p) = &spec.x_pending {
            if p.ncols() != gp.dims() {
                return Err(Error::Parameter(format!(
                    "pending points have {} columns, model has {}",
                    p.ncols(),
                    gp.dims()
                )));
            }
            if !spec.variant.is_monte_carlo() {
                return Err(Error::Parameter("pending points need a Monte-Carlo acquisition".into()));
            }
        }
        Ok(Self { gp, spec })
    }

    pub fn spec(&self) -> &AcquisitionSpec {
        &self.spec
    }

    pub fn gp(&self) -> &Arc<ConditionedGp> {
        &self.gp
    }

    pub fn dims(&self) -> usize {
        self.gp.dims()
    }

    pub fn is_monte_carlo(&self) -> bool {
        self.spec.variant.is_monte_carlo()
    }

    /// True when repeated evaluations at the same batch are bitwise equal.
    pub fn is_deterministic(&self) -> bool {
        !self.is_monte_carlo() || self.spec.fix_base_samples
    }

    pub fn with_pending(&self, x_pending: &DMatrix<f64>) -> Result<Self> {
        Self::new(self.gp.clone(), self.spec.with_pending(x_pending)?)
    }

    /// Base samples for a batch of `q` points when they are fixed.
    pub fn fixed_base_samples(&self, q: usize) -> Result<Option<DMatrix<f64>>> {
        if !self.is_monte_carlo() || !self.spec.fix_base_samples {
            return Ok(None);
        }
        Ok(stored_samples(&self.spec, q + self.spec.num_pending())?.map(Cow::into_owned))
    }

    fn check_batch(&self, x_batch: &DMatrix<f64>) -> Result<()> {
        if x_batch.ncols() != self.dims() {
            return Err(Error::Parameter(format!(
                "batch has {} columns, model has {}",
                x_batch.ncols(),
                self.dims()
            )));
        }
        if !self.is_monte_carlo() && x_batch.nrows() != 1 {
            return Err(Error::Parameter("analytic acquisitions take exactly one point".into()));
        }
        Ok(())
    }

    fn analytic(&self, x_batch: &DMatrix<f64>) -> Result<(f64, DMatrix<f64>)> {
        let x: Vec<f64> = x_batch.row(0).iter().copied().collect();
        let (v, g) = match self.spec.variant {
            AcquisitionKind::Ei => ei_with_gradient(&self.gp, &x, self.spec.y_best)?,
            _ => ucb_with_gradient(&self.gp, &x, self.spec.beta)?,
        };
        Ok((v, DMatrix::from_row_slice(1, g.len(), &g)))
    }

    pub fn evaluate<R: Rng + ?Sized>(&self, x_batch: &DMatrix<f64>, rng: &mut R) -> Result<f64> {
        self.check_batch(x_batch)?;
        if !self.is_monte_carlo() {
            return Ok(self.analytic(x_batch)?.0);
        }
        let z = resolve_samples(&self.spec, x_batch.nrows() + self.spec.num_pending(), rng)?;
        Ok(evaluate_mc(&self.gp, &self.spec, x_batch, &z, false)?.0)
    }

    /// Value and gradient with respect to the batch rows (pending points
    /// receive no gradient).
    pub fn evaluate_with_gradient<R: Rng + ?Sized>(
        &self,
        x_batch: &DMatrix<f64>,
        rng: &mut R,
    ) -> Result<(f64, DMatrix<f64>)> {
        self.check_batch(x_batch)?;
        if !self.is_monte_carlo() {
            return self.analytic(x_batch);
        }
        let z = resolve_samples(&self.spec, x_batch.nrows() + self.spec.num_pending(), rng)?;
        let (v, g) = evaluate_mc(&self.gp, &self.spec, x_batch, &z, true)?;
        Ok((v, g.expect("gradient requested")))
    }

    /// Evaluation with caller-supplied base samples (`samples x (p + q)`).
    pub fn evaluate_with_base_samples(
        &self,
        x_batch: &DMatrix<f64>,
        z: &DMatrix<f64>,
        grad: bool,
    ) -> Result<(f64, Option<DMatrix<f64>>)> {
        self.check_batch(x_batch)?;
        if !self.is_monte_carlo() {
            let (v, g) = self.analytic(x_batch)?;
            return Ok((v, grad.then_some(g)));
        }
        evaluate_mc(&self.gp, &self.spec, x_batch, z, grad)
    }
}
