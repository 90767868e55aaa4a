use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Training inputs (n x d, problem units), outputs and optional per-point
/// fixed noise variances.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    inputs: DMatrix<f64>,
    outputs: DVector<f64>,
    fixed_noise: Option<DVector<f64>>,
}

impl Dataset {
    pub fn new(inputs: DMatrix<f64>, outputs: DVector<f64>) -> Result<Self> {
        if inputs.nrows() != outputs.len() {
            return Err(Error::Parameter(format!(
                "{} input rows but {} outputs",
                inputs.nrows(),
                outputs.len()
            )));
        }
        if inputs.ncols() == 0 {
            return Err(Error::Parameter("inputs need at least one column".into()));
        }
        if inputs.iter().chain(outputs.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Domain("training data contains non-finite values".into()));
        }
        Ok(Self {
            inputs,
            outputs,
            fixed_noise: None,
        })
    }

    /// Attaches known observation-noise variances, one per training point.
    pub fn with_fixed_noise(mut self, noise: DVector<f64>) -> Result<Self> {
        if noise.len() != self.outputs.len() {
            return Err(Error::Parameter(format!(
                "{} noise entries for {} observations",
                noise.len(),
                self.outputs.len()
            )));
        }
        if noise.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Domain("fixed noise must be finite and non-negative".into()));
        }
        self.fixed_noise = Some(noise);
        Ok(self)
    }

    pub fn inputs(&self) -> &DMatrix<f64> {
        &self.inputs
    }

    pub fn outputs(&self) -> &DVector<f64> {
        &self.outputs
    }

    pub fn fixed_noise(&self) -> Option<&DVector<f64>> {
        self.fixed_noise.as_ref()
    }

    pub fn len(&self) -> usize {
        self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }

    pub fn dims(&self) -> usize {
        self.inputs.ncols()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_shape_mismatch_and_nan() {
        let x = DMatrix::zeros(3, 2);
        assert!(Dataset::new(x.clone(), DVector::zeros(2)).is_err());
        let mut y = DVector::zeros(3);
        y[1] = f64::NAN;
        assert!(matches!(Dataset::new(x.clone(), y), Err(Error::Domain(_))));
        let d = Dataset::new(x, DVector::zeros(3)).unwrap();
        assert!(d.clone().with_fixed_noise(DVector::zeros(2)).is_err());
        assert!(d.with_fixed_noise(DVector::from_element(3, -1.0)).is_err());
    }
}
