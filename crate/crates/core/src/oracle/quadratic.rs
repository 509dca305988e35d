use nalgebra::{DMatrix, DVector};

use super::Landscape;
use crate::error::{Error, Result};
use crate::linalg::{is_symmetric, sorted_symmetric_eigen};

/// `f(x) = x^T A x / 2` for symmetric `A`.
#[derive(Clone, Debug)]
pub struct Quadratic {
    matrix: DMatrix<f64>,
    saddle: Option<DVector<f64>>,
}

impl Quadratic {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::invalid("quadratic form needs a non-empty square matrix"));
        }
        if !is_symmetric(&matrix, 1e-12) {
            return Err(Error::invalid("quadratic form matrix is not symmetric"));
        }
        let (eigs, _) = sorted_symmetric_eigen(&matrix);
        let scale = eigs.amax().max(f64::MIN_POSITIVE);
        let indefinite = eigs[0] < 0.0 && eigs[eigs.len() - 1] > 0.0;
        let nonsingular = eigs.iter().all(|e| e.abs() > 1e-12 * scale);
        let saddle = (indefinite && nonsingular).then(|| DVector::zeros(matrix.nrows()));
        Ok(Quadratic { matrix, saddle })
    }

    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        Quadratic::new(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
}

impl Landscape for Quadratic {
    fn name(&self) -> &str {
        "quadratic"
    }

    fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn value(&mut self, x: &[f64]) -> Result<f64> {
        let d = self.matrix.nrows();
        let mut acc = 0.0;
        for j in 0..d {
            let col = self.matrix.column(j);
            let mut s = 0.0;
            for i in 0..d {
                s += x[i] * col[i];
            }
            acc += s * x[j];
        }
        Ok(0.5 * acc)
    }

    fn gradient(&self, x: &[f64]) -> Option<DVector<f64>> {
        Some(&self.matrix * DVector::from_column_slice(x))
    }

    fn hessian(&self, _x: &[f64]) -> Option<DMatrix<f64>> {
        Some(self.matrix.clone())
    }

    fn known_saddle(&self) -> Option<DVector<f64>> {
        self.saddle.clone()
    }
}
