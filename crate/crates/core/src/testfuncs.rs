use std::f64::consts::{E, PI};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimise::Bounds;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFunctionKind {
    Ackley,
    Hartmann3D,
    Hartmann6D,
}

const HARTMANN_ALPHA: [f64; 4] = [1.0, 1.2, 3.0, 3.2];

const HARTMANN3_A: [[f64; 3]; 4] = [
    [3.0, 10.0, 30.0],
    [0.1, 10.0, 35.0],
    [3.0, 10.0, 30.0],
    [0.1, 10.0, 35.0],
];
const HARTMANN3_P: [[f64; 3]; 4] = [
    [0.3689, 0.1170, 0.2673],
    [0.4699, 0.4387, 0.7470],
    [0.1091, 0.8732, 0.5547],
    [0.0381, 0.5743, 0.8828],
];
const HARTMANN3_ARGMAX: [f64; 3] = [0.11458888122541287, 0.5556488954739371, 0.8525469842172746];

const HARTMANN6_A: [[f64; 6]; 4] = [
    [10.0, 3.0, 17.0, 3.5, 1.7, 8.0],
    [0.05, 10.0, 17.0, 0.1, 8.0, 14.0],
    [3.0, 3.5, 1.7, 10.0, 17.0, 8.0],
    [17.0, 8.0, 0.05, 10.0, 0.1, 14.0],
];
const HARTMANN6_P: [[f64; 6]; 4] = [
    [0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886],
    [0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991],
    [0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650],
    [0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381],
];
const HARTMANN6_ARGMAX: [f64; 6] = [
    0.20168950909365746,
    0.15001069354111374,
    0.4768739729250998,
    0.2753324275220782,
    0.3116516172395686,
    0.6573005345536702,
];

/// Maximised form `sum_i alpha_i exp(-sum_j A_ij (x_j - P_ij)^2)`.
fn hartmann<const D: usize>(a: &[[f64; D]; 4], p: &[[f64; D]; 4], x: &[f64]) -> f64 {
    (0..4)
        .map(|i| {
            let inner: f64 = (0..D).map(|j| a[i][j] * (x[j] - p[i][j]).powi(2)).sum();
            HARTMANN_ALPHA[i] * (-inner).exp()
        })
        .sum()
}

fn ackley(x: &[f64]) -> f64 {
    let (a, b, c) = (20.0, 0.2, 2.0 * PI);
    let n = x.len() as f64;
    let sq = x.iter().map(|v| v * v).sum::<f64>() / n;
    let cs = x.iter().map(|v| (c * v).cos()).sum::<f64>() / n;
    (a - a * (-b * sq.sqrt()).exp()) + (E - cs.exp())
}

/// Synthetic black-box objective with optional Gaussian observation noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub kind: TestFunctionKind,
    pub dims: usize,
    pub noise_std: f64,
    pub minimise: bool,
}

impl TestFunction {
    pub fn new(kind: TestFunctionKind, dims: Option<usize>, noise_std: f64, minimise: bool) -> Result<Self> {
        let fixed = match kind {
            TestFunctionKind::Ackley => None,
            TestFunctionKind::Hartmann3D => Some(3),
            TestFunctionKind::Hartmann6D => Some(6),
        };
        let dims = match (fixed, dims) {
            (Some(f), Some(d)) if f != d => {
                return Err(Error::Parameter(format!(
                    "{kind:?} is defined for {f} dimensions, not {d}"
                )))
            }
            (Some(f), _) => f,
            (None, Some(d)) if d >= 1 => d,
            (None, _) => return Err(Error::Parameter("Ackley needs at least one dimension".into())),
        };
        if !(noise_std.is_finite() && noise_std >= 0.0) {
            return Err(Error::Parameter(format!(
                "noise_std {noise_std} must be finite and non-negative"
            )));
        }
        Ok(Self {
            kind,
            dims,
            noise_std,
            minimise,
        })
    }

    pub fn ackley(dims: usize, noise_std: f64, minimise: bool) -> Result<Self> {
        Self::new(TestFunctionKind::Ackley, Some(dims), noise_std, minimise)
    }

    pub fn hartmann3d(noise_std: f64, minimise: bool) -> Result<Self> {
        Self::new(TestFunctionKind::Hartmann3D, None, noise_std, minimise)
    }

    pub fn hartmann6d(noise_std: f64, minimise: bool) -> Result<Self> {
        Self::new(TestFunctionKind::Hartmann6D, None, noise_std, minimise)
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn bounds(&self) -> Bounds {
        match self.kind {
            TestFunctionKind::Ackley => Bounds::uniform(self.dims, -32.768, 32.768),
            _ => Ok(Bounds::unit(self.dims)),
        }
        .expect("static bounds are valid")
    }

    /// Location of the global optimum.
    pub fn optimum_input(&self) -> Vec<f64> {
        match self.kind {
            TestFunctionKind::Ackley => vec![0.0; self.dims],
            TestFunctionKind::Hartmann3D => HARTMANN3_ARGMAX.to_vec(),
            TestFunctionKind::Hartmann6D => HARTMANN6_ARGMAX.to_vec(),
        }
    }

    /// Optimal value in this function's sign convention.
    pub fn optimum_value(&self) -> f64 {
        self.noise_free(&self.optimum_input())
    }

    /// Closed-form value without noise, in this function's sign convention.
    pub fn noise_free(&self, x: &[f64]) -> f64 {
        // value in the natural minimisation form
        let v = match self.kind {
            TestFunctionKind::Ackley => ackley(x),
            TestFunctionKind::Hartmann3D => -hartmann(&HARTMANN3_A, &HARTMANN3_P, x),
            TestFunctionKind::Hartmann6D => -hartmann(&HARTMANN6_A, &HARTMANN6_P, x),
        };
        if self.minimise {
            v
        } else {
            -v
        }
    }

    /// Evaluates every row of `x` with noise drawn from `seed`.
    pub fn evaluate(&self, x: &DMatrix<f64>, seed: u64) -> Result<DVector<f64>> {
        self.evaluate_with_rng(x, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    /// Objective closure that draws its noise from one stream seeded by `seed`.
    pub fn objective(&self, seed: u64) -> impl FnMut(&DMatrix<f64>) -> Result<DVector<f64>> {
        let f = self.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        move |x| f.evaluate_with_rng(x, &mut rng)
    }

    pub fn evaluate_with_rng<R: Rng + ?Sized>(&self, x: &DMatrix<f64>, rng: &mut R) -> Result<DVector<f64>> {
        if x.ncols() != self.dims {
            return Err(Error::Parameter(format!(
                "inputs have {} columns, function takes {}",
                x.ncols(),
                self.dims
            )));
        }
        let mut out = DVector::zeros(x.nrows());
        for (i, row) in x.row_iter().enumerate() {
            let r: Vec<f64> = row.iter().copied().collect();
            let mut v = self.noise_free(&r);
            if self.noise_std > 0.0 {
                let z: f64 = rng.sample(StandardNormal);
                v += self.noise_std * z;
            }
            out[i] = v;
        }
        Ok(out)
    }
}
