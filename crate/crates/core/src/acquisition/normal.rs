use std::f64::consts::{PI, SQRT_2};

use libm::erfc;

/// Standard normal density.
pub fn pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// Standard normal distribution function.
pub fn cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_points() {
        assert!((pdf(0.0) - 0.3989422804014327).abs() < 1e-15);
        assert_eq!(cdf(0.0), 0.5);
        assert!((cdf(1.0) - 0.8413447460685429).abs() < 1e-14);
        assert!((cdf(-1.0) + cdf(1.0) - 1.0).abs() < 1e-15);
    }
}
