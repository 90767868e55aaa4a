//! Dense linear-algebra helpers shared by the surrogate and the Monte-Carlo
//! acquisition functions.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative jitter tried after an unjittered factorisation fails.
pub const JITTER_START: f64 = 1e-8;
/// Largest relative jitter before giving up.
pub const JITTER_MAX: f64 = 1e-4;

/// Lower Cholesky factor of `A + jitter * I`.
#[derive(Debug, Clone)]
pub struct JitteredCholesky {
    pub l: DMatrix<f64>,
    pub jitter: f64,
}

impl JitteredCholesky {
    /// Solves `(A + jitter I) x = b`.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let y = self.solve_lower(b);
        self.l
            .tr_solve_lower_triangular(&y)
            .expect("positive Cholesky diagonal")
    }

    /// Solves `(A + jitter I) X = B` column-wise.
    pub fn solve_matrix(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let y = self.l.solve_lower_triangular(b).expect("positive Cholesky diagonal");
        self.l
            .tr_solve_lower_triangular(&y)
            .expect("positive Cholesky diagonal")
    }

    /// Solves `L y = b`.
    pub fn solve_lower(&self, b: &DVector<f64>) -> DVector<f64> {
        self.l.solve_lower_triangular(b).expect("positive Cholesky diagonal")
    }

    /// `log |A + jitter I|`.
    pub fn log_det(&self) -> f64 {
        2.0 * self.l.diagonal().iter().map(|d| d.ln()).sum::<f64>()
    }

    /// Explicit inverse of `A + jitter I`.
    pub fn inverse(&self) -> DMatrix<f64> {
        let n = self.l.nrows();
        self.solve_matrix(&DMatrix::identity(n, n))
    }
}

/// Factorises a symmetric matrix, escalating diagonal jitter by factors of
/// ten from `JITTER_START * scale` to `JITTER_MAX * scale` when the plain
/// factorisation fails.
pub fn cholesky_with_jitter(a: &DMatrix<f64>, scale: f64) -> Result<JitteredCholesky> {
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("matrix to factorise contains non-finite entries".into()));
    }
    if let Some(c) = Cholesky::new(a.clone()) {
        return Ok(JitteredCholesky { l: c.l(), jitter: 0.0 });
    }
    let scale = if scale.is_finite() && scale > 0.0 { scale } else { 1.0 };
    let n = a.nrows();
    let mut rel = JITTER_START;
    let mut jitter = rel * scale;
    while rel <= JITTER_MAX * (1.0 + 1e-9) {
        jitter = rel * scale;
        let shifted = a + DMatrix::<f64>::identity(n, n) * jitter;
        if let Some(c) = Cholesky::new(shifted) {
            return Ok(JitteredCholesky { l: c.l(), jitter });
        }
        rel *= 10.0;
    }
    Err(Error::IllConditioned { jitter })
}

/// Reverse-mode derivative of the Cholesky factorisation.
///
/// Given `l_bar = dJ/dL` (lower triangle used), returns the symmetric
/// `dJ/dA` such that `dJ = sum_ij S_ij dA_ij` for symmetric perturbations.
pub fn cholesky_backward(l: &DMatrix<f64>, l_bar: &DMatrix<f64>) -> DMatrix<f64> {
    let m = l.nrows();
    let mut p = l.transpose() * l_bar;
    for i in 0..m {
        for j in 0..m {
            if j > i {
                p[(i, j)] = 0.0;
            } else if j == i {
                p[(i, j)] *= 0.5;
            }
        }
    }
    // X = L^-T P, then G = X L^-1 = (L^-T X^T)^T
    let x = l.tr_solve_lower_triangular(&p).expect("positive Cholesky diagonal");
    let gt = l
        .tr_solve_lower_triangular(&x.transpose())
        .expect("positive Cholesky diagonal");
    let g = gt.transpose();
    (&g + g.transpose()) * 0.5
}

/// Arithmetic mean of a matrix diagonal.
pub fn mean_diagonal(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows().min(a.ncols());
    if n == 0 {
        return 0.0;
    }
    a.diagonal().iter().sum::<f64>() / n as f64
}
