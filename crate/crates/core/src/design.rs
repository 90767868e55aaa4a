use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimise::Bounds;

pub const DEFAULT_NUM_DESIGNS: usize = 100;

/// Settings for a maximin Latin hypercube design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignConfig {
    pub num_points: usize,
    pub num_dims: usize,
    pub bounds: Bounds,
    #[serde(default = "default_num_designs")]
    pub num_designs: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_num_designs() -> usize {
    DEFAULT_NUM_DESIGNS
}

impl DesignConfig {
    pub fn new(num_points: usize, bounds: Bounds, seed: u64) -> Self {
        Self {
            num_points,
            num_dims: bounds.dims(),
            bounds,
            num_designs: DEFAULT_NUM_DESIGNS,
            seed,
        }
    }

    pub fn dims(&self) -> usize {
        self.bounds.dims()
    }

    fn validate(&self) -> Result<()> {
        if self.num_points == 0 {
            return Err(Error::Parameter("design needs at least one point".into()));
        }
        if self.num_dims != self.bounds.dims() {
            return Err(Error::Parameter(format!(
                "num_dims {} does not match {} bound columns",
                self.num_dims,
                self.bounds.dims()
            )));
        }
        if self.num_designs == 0 {
            return Err(Error::Parameter("num_designs must be at least one".into()));
        }
        Ok(())
    }
}

/// One Latin hypercube sample on the unit cube: each column holds exactly
/// one point per stratum `[k/n, (k+1)/n)`.
pub fn latin_hypercube<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(n, d);
    let nf = n as f64;
    let mut perm: Vec<usize> = (0..n).collect();
    for j in 0..d {
        perm.shuffle(rng);
        for (i, &k) in perm.iter().enumerate() {
            let u: f64 = rng.random();
            let mut v = (k as f64 + u) / nf;
            // keep floor(v * n) == k despite rounding
            while (v * nf).floor() as usize > k {
                v = v.next_down();
            }
            while ((v * nf).floor() as usize) < k {
                v = v.next_up();
            }
            out[(i, j)] = v;
        }
    }
    out
}

/// Smallest Euclidean distance between two rows (infinite for one row).
pub fn min_pairwise_distance(x: &DMatrix<f64>) -> f64 {
    let n = x.nrows();
    let mut best = f64::INFINITY;
    for i in 0..n {
        for j in 0..i {
            let d2: f64 = (0..x.ncols()).map(|c| (x[(i, c)] - x[(j, c)]).powi(2)).sum();
            best = best.min(d2);
        }
    }
    best.sqrt()
}

/// Every candidate unit-cube design drawn for `config`, in draw order.
pub fn candidate_designs(config: &DesignConfig) -> Result<Vec<DMatrix<f64>>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    Ok((0..config.num_designs)
        .map(|_| latin_hypercube(config.num_points, config.dims(), &mut rng))
        .collect())
}

/// Maximin Latin hypercube design scaled to the bounds.
pub fn gen_inputs(config: &DesignConfig) -> Result<DMatrix<f64>> {
    let designs = candidate_designs(config)?;
    let mut best = 0;
    let mut best_dist = f64::NEG_INFINITY;
    for (i, d) in designs.iter().enumerate() {
        let dist = min_pairwise_distance(d);
        if dist > best_dist {
            best = i;
            best_dist = dist;
        }
    }
    Ok(unnormalise(&designs[best], &config.bounds))
}

fn check_dims(x: &DMatrix<f64>, bounds: &Bounds) -> Result<()> {
    if x.ncols() != bounds.dims() {
        return Err(Error::Parameter(format!(
            "inputs have {} columns but bounds have {}",
            x.ncols(),
            bounds.dims()
        )));
    }
    Ok(())
}

/// Maps inputs from the bounds box onto the unit cube.
pub fn normalise(x: &DMatrix<f64>, bounds: &Bounds) -> Result<DMatrix<f64>> {
    check_dims(x, bounds)?;
    let (lo, hi) = (bounds.lower(), bounds.upper());
    Ok(DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| {
        (x[(i, j)] - lo[j]) / (hi[j] - lo[j])
    }))
}

/// Maps unit-cube inputs back onto the bounds box.
pub fn unnormalise(u: &DMatrix<f64>, bounds: &Bounds) -> DMatrix<f64> {
    let (lo, hi) = (bounds.lower(), bounds.upper());
    DMatrix::from_fn(u.nrows(), u.ncols(), |i, j| lo[j] + u[(i, j)] * (hi[j] - lo[j]))
}

/// Mean and sample standard deviation of an output vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Standardiser {
    pub mean: f64,
    pub std: f64,
}

impl Standardiser {
    pub fn fit(y: &DVector<f64>) -> Result<Self> {
        if y.len() < 2 {
            return Err(Error::ZeroVariance(format!(
                "need at least two outputs, got {}",
                y.len()
            )));
        }
        let mean = y.mean();
        let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (y.len() - 1) as f64;
        let std = var.sqrt();
        if !std.is_finite() || std <= 0.0 {
            return Err(Error::ZeroVariance(format!("output standard deviation is {std}")));
        }
        Ok(Self { mean, std })
    }

    pub fn apply(&self, y: &DVector<f64>) -> DVector<f64> {
        y.map(|v| (v - self.mean) / self.std)
    }

    pub fn invert(&self, z: f64) -> f64 {
        z * self.std + self.mean
    }
}

/// Zero mean, unit sample standard deviation.
pub fn standardise(y: &DVector<f64>) -> Result<DVector<f64>> {
    Ok(Standardiser::fit(y)?.apply(y))
}
