use crate::error::Result;

/// Scalar objective to be maximised.
pub trait Objective {
    fn value(&mut self, x: &[f64]) -> Result<f64>;
    fn value_and_gradient(&mut self, x: &[f64]) -> Result<(f64, Vec<f64>)>;
}

/// Objective built from closures.
pub struct FnObjective<F> {
    f: F,
}

impl<F> FnObjective<F>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    /// `f` returns the value and gradient.
    pub fn new(f: F) -> Self {
        Self { f }
    }
}

impl<F> Objective for FnObjective<F>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    fn value(&mut self, x: &[f64]) -> Result<f64> {
        Ok((self.f)(x).0)
    }

    fn value_and_gradient(&mut self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        Ok((self.f)(x))
    }
}

/// Fixes every coordinate outside `free` to the values in `template`.
pub struct Restricted<'a, O: ?Sized> {
    inner: &'a mut O,
    template: Vec<f64>,
    free: Vec<usize>,
}

impl<'a, O: Objective + ?Sized> Restricted<'a, O> {
    pub fn new(inner: &'a mut O, template: Vec<f64>, free: Vec<usize>) -> Self {
        Self { inner, template, free }
    }

    pub fn expand(&self, z: &[f64]) -> Vec<f64> {
        let mut x = self.template.clone();
        for (k, &i) in self.free.iter().enumerate() {
            x[i] = z[k];
        }
        x
    }
}

impl<O: Objective + ?Sized> Objective for Restricted<'_, O> {
    fn value(&mut self, z: &[f64]) -> Result<f64> {
        let x = self.expand(z);
        self.inner.value(&x)
    }

    fn value_and_gradient(&mut self, z: &[f64]) -> Result<(f64, Vec<f64>)> {
        let x = self.expand(z);
        let (v, g) = self.inner.value_and_gradient(&x)?;
        Ok((v, self.free.iter().map(|&i| g[i]).collect()))
    }
}
