use nalgebra::{DMatrix, DVector};

use super::Landscape;
use crate::error::{Error, Result};

/// `f(x) = sum_i sin(x_i)`. Every derivative is bounded by 1 and the
/// Gaussian smoothing is available in closed form, which makes it the test
/// bed for the estimator bias and moment bounds.
#[derive(Clone, Debug)]
pub struct SumOfSines {
    dim: usize,
}

impl SumOfSines {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("sum of sines needs d >= 1"));
        }
        Ok(SumOfSines { dim })
    }

    /// Gradient of the Gaussian smoothing `E[f(x + l r)]`:
    /// `exp(-l^2 / 2) cos(x)` componentwise.
    pub fn smoothed_gradient(x: &DVector<f64>, l: f64) -> DVector<f64> {
        let damp = (-0.5 * l * l).exp();
        x.map(|v| damp * v.cos())
    }
}

impl Landscape for SumOfSines {
    fn name(&self) -> &str {
        "sum_of_sines"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&mut self, x: &[f64]) -> Result<f64> {
        Ok(x.iter().map(|v| v.sin()).sum())
    }

    fn gradient(&self, x: &[f64]) -> Option<DVector<f64>> {
        Some(DVector::from_iterator(x.len(), x.iter().map(|v| v.cos())))
    }

    fn hessian(&self, x: &[f64]) -> Option<DMatrix<f64>> {
        Some(DMatrix::from_diagonal(&DVector::from_iterator(
            x.len(),
            x.iter().map(|v| -v.sin()),
        )))
    }
}
