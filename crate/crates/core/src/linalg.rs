//! Small dense linear-algebra helpers shared by the search routines.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative norm below which a vector is treated as linearly dependent on
/// the columns it was projected against.
const RANK_TOL: f64 = 1e-12;

/// Orthonormal set of `k` column vectors in `R^d`, the working estimate of
/// the unstable subspace.
#[derive(Clone, Debug, PartialEq)]
pub struct Basis {
    dim: usize,
    columns: Vec<DVector<f64>>,
}

impl Basis {
    pub fn empty(dim: usize) -> Self {
        Basis {
            dim,
            columns: Vec::new(),
        }
    }

    /// Orthonormalizes `columns` in order by modified Gram-Schmidt with one
    /// re-orthogonalization pass.
    pub fn orthonormalize(dim: usize, mut columns: Vec<DVector<f64>>) -> Result<Self> {
        for (j, c) in columns.iter().enumerate() {
            if c.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: c.len(),
                });
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("basis column {j} is not finite")));
            }
        }
        if columns.len() > dim {
            return Err(Error::invalid(format!(
                "{} columns cannot be orthonormal in dimension {dim}",
                columns.len()
            )));
        }
        modified_gram_schmidt(&mut columns)?;
        Ok(Basis { dim, columns })
    }

    /// Builds a basis from the columns of a `d x k` matrix.
    pub fn from_matrix(m: &DMatrix<f64>) -> Result<Self> {
        let cols = m.column_iter().map(|c| c.into_owned()).collect();
        Basis::orthonormalize(m.nrows(), cols)
    }

    /// Wraps columns the caller guarantees to be orthonormal.
    pub(crate) fn from_orthonormal(dim: usize, columns: Vec<DVector<f64>>) -> Self {
        debug_assert!(columns.iter().all(|c| c.len() == dim));
        Basis { dim, columns }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of columns.
    pub fn k(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn columns(&self) -> &[DVector<f64>] {
        &self.columns
    }

    pub fn column(&self, i: usize) -> &DVector<f64> {
        &self.columns[i]
    }

    pub fn into_columns(self) -> Vec<DVector<f64>> {
        self.columns
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        if self.columns.is_empty() {
            return DMatrix::zeros(self.dim, 0);
        }
        DMatrix::from_columns(&self.columns)
    }

    /// Dense orthogonal projector `V V^T`.
    pub fn projector(&self) -> DMatrix<f64> {
        let v = self.to_matrix();
        &v * v.transpose()
    }

    /// `(I - V V^T) w`.
    pub fn project_out(&self, w: &DVector<f64>) -> DVector<f64> {
        let mut out = w.clone();
        for c in &self.columns {
            let coef = c.dot(w);
            out.axpy(-coef, c, 1.0);
        }
        out
    }

    /// Householder-type reflection `(I - 2 V V^T) g` that flips the
    /// components of `g` inside the spanned subspace.
    pub fn reflect(&self, g: &DVector<f64>) -> DVector<f64> {
        let mut out = g.clone();
        for c in &self.columns {
            let coef = c.dot(g);
            out.axpy(-2.0 * coef, c, 1.0);
        }
        out
    }

    pub fn negated(&self) -> Basis {
        Basis {
            dim: self.dim,
            columns: self.columns.iter().map(|c| -c).collect(),
        }
    }

    /// Largest deviation of `V^T V` from the identity.
    pub fn orthonormality_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in self.columns.iter().enumerate() {
            for (j, b) in self.columns.iter().enumerate().skip(i) {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((a.dot(b) - target).abs());
            }
        }
        worst
    }
}

/// In-place modified Gram-Schmidt, run twice for numerical orthogonality.
pub fn modified_gram_schmidt(columns: &mut [DVector<f64>]) -> Result<()> {
    for j in 0..columns.len() {
        let original = columns[j].norm();
        if original == 0.0 {
            return Err(Error::invalid(format!("basis column {j} is zero")));
        }
        for _pass in 0..2 {
            let (done, rest) = columns.split_at_mut(j);
            let c = &mut rest[0];
            for q in done.iter() {
                let coef = q.dot(c);
                c.axpy(-coef, q, 1.0);
            }
        }
        let norm = columns[j].norm();
        if norm <= RANK_TOL * original {
            return Err(Error::invalid(format!(
                "basis column {j} is linearly dependent on the preceding columns"
            )));
        }
        columns[j] /= norm;
    }
    Ok(())
}

/// Symmetric eigendecomposition with eigenvalues sorted ascending and the
/// eigenvectors permuted to match.
pub fn sorted_symmetric_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m.clone());
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let vectors = DMatrix::from_columns(
        &order
            .iter()
            .map(|&i| eig.eigenvectors.column(i).into_owned())
            .collect::<Vec<_>>(),
    );
    (values, vectors)
}

/// Spectral norm of a symmetric matrix.
pub fn symmetric_spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

pub fn is_symmetric(m: &DMatrix<f64>, tol: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    let scale = m.amax().max(1.0);
    (0..m.nrows()).all(|i| (0..i).all(|j| (m[(i, j)] - m[(j, i)]).abs() <= tol * scale))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gram_schmidt_handles_nearly_parallel_columns() {
        let a = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        let b = DVector::from_vec(vec![1.0, 1e-7, 0.0]);
        let c = DVector::from_vec(vec![1.0, 1e-7, 1e-7]);
        let basis = Basis::orthonormalize(3, vec![a, b, c]).unwrap();
        assert!(basis.orthonormality_error() < 1e-12);
    }

    #[test]
    fn dependent_columns_are_rejected() {
        let a = DVector::from_vec(vec![1.0, 2.0]);
        let b = DVector::from_vec(vec![2.0, 4.0]);
        assert!(Basis::orthonormalize(2, vec![a, b]).is_err());
    }

    #[test]
    fn reflection_is_an_involution() {
        let basis = Basis::orthonormalize(
            3,
            vec![
                DVector::from_vec(vec![1.0, 2.0, 3.0]),
                DVector::from_vec(vec![-1.0, 0.5, 2.0]),
            ],
        )
        .unwrap();
        let g = DVector::from_vec(vec![0.3, -1.2, 4.0]);
        let twice = basis.reflect(&basis.reflect(&g));
        assert!((twice - g).amax() < 1e-12);
    }

    #[test]
    fn sorted_eigen_orders_ascending() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, -2.0, 1.0]));
        let (vals, vecs) = sorted_symmetric_eigen(&m);
        assert_eq!(vals.as_slice(), &[-2.0, 1.0, 3.0]);
        assert!((vecs[(1, 0)].abs() - 1.0).abs() < 1e-14);
    }
}
