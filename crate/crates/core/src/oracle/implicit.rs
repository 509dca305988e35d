use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use super::Landscape;
use crate::error::{Error, Result};

const MAX_NEWTON: usize = 100;

/// Where the inner Newton solve starts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WarmStart {
    /// Start from the minimizer found by the previous evaluation.
    #[default]
    LastSolution,
    /// Start from `z = (x, y)` on every evaluation.
    Cold,
}

/// `f(x, y) = min_z (x - z1)^2 + (y - z2)^2 + sin(z1 z2)`, evaluated by an
/// inner damped Newton solve over `z`.
#[derive(Clone, Debug)]
pub struct Implicit2d {
    tol: f64,
    warm_start: WarmStart,
    last_z: Option<Vector2<f64>>,
}

fn inner_value(x: f64, y: f64, z: &Vector2<f64>) -> f64 {
    (x - z[0]).powi(2) + (y - z[1]).powi(2) + (z[0] * z[1]).sin()
}

fn inner_gradient(x: f64, y: f64, z: &Vector2<f64>) -> Vector2<f64> {
    let c = (z[0] * z[1]).cos();
    Vector2::new(
        -2.0 * (x - z[0]) + z[1] * c,
        -2.0 * (y - z[1]) + z[0] * c,
    )
}

fn inner_hessian(z: &Vector2<f64>) -> Matrix2<f64> {
    let p = z[0] * z[1];
    let (s, c) = p.sin_cos();
    let off = c - p * s;
    Matrix2::new(2.0 - z[1] * z[1] * s, off, off, 2.0 - z[0] * z[0] * s)
}

/// Damped Newton on `z -> g(x, y, z)`, shifting the Hessian when it is not
/// positive definite and backtracking on `g`.
fn solve_inner(x: f64, y: f64, start: Vector2<f64>, tol: f64) -> Result<Vector2<f64>> {
    let mut z = start;
    let mut grad = inner_gradient(x, y, &z);
    let mut iterations = 0;
    while grad.norm() > tol {
        if iterations == MAX_NEWTON {
            return Err(Error::InnerSolver {
                x,
                y,
                iterations,
                residual: grad.norm(),
            });
        }
        iterations += 1;
        let mut h = inner_hessian(&z);
        let lambda_min = h.symmetric_eigenvalues().min();
        if lambda_min <= 1e-8 {
            h += Matrix2::identity() * (1.0 - lambda_min);
        }
        let Some(dir) = h.cholesky().map(|c| -c.solve(&grad)) else {
            return Err(Error::InnerSolver {
                x,
                y,
                iterations,
                residual: grad.norm(),
            });
        };
        let g0 = inner_value(x, y, &z);
        let slope = grad.dot(&dir);
        let mut t = 1.0;
        let mut next = z + dir;
        // Close to the minimizer the value decrease drowns in round-off, so a
        // full step that shrinks the gradient is accepted as well.
        while inner_value(x, y, &next) > g0 + 1e-4 * t * slope
            && inner_gradient(x, y, &next).norm() >= grad.norm()
        {
            t *= 0.5;
            if t < 1e-12 {
                return Err(Error::InnerSolver {
                    x,
                    y,
                    iterations,
                    residual: grad.norm(),
                });
            }
            next = z + dir * t;
        }
        z = next;
        grad = inner_gradient(x, y, &z);
    }
    Ok(z)
}

impl Implicit2d {
    pub fn new(tol: f64) -> Result<Self> {
        Implicit2d::with_warm_start(tol, WarmStart::LastSolution)
    }

    pub fn with_warm_start(tol: f64, warm_start: WarmStart) -> Result<Self> {
        if !(tol > 0.0) {
            return Err(Error::invalid("inner tolerance must be positive"));
        }
        Ok(Implicit2d {
            tol,
            warm_start,
            last_z: None,
        })
    }

    /// Forgets the cached inner minimizer.
    pub fn reset(&mut self) {
        self.last_z = None;
    }

    /// Inner minimizer at `(x, y)` from a cold start, leaving the cache alone.
    pub fn inner_minimizer(&self, x: f64, y: f64) -> Result<Vector2<f64>> {
        solve_inner(x, y, Vector2::new(x, y), self.tol)
    }
}

impl Landscape for Implicit2d {
    fn name(&self) -> &str {
        "implicit_2d"
    }

    fn dim(&self) -> usize {
        2
    }

    fn value(&mut self, p: &[f64]) -> Result<f64> {
        let (x, y) = (p[0], p[1]);
        let start = match (self.warm_start, self.last_z) {
            (WarmStart::LastSolution, Some(z)) => z,
            _ => Vector2::new(x, y),
        };
        let z = solve_inner(x, y, start, self.tol)?;
        self.last_z = Some(z);
        Ok(inner_value(x, y, &z))
    }

    /// Envelope theorem: `grad f = d g / d(x, y)` at the inner minimizer.
    fn gradient(&self, p: &[f64]) -> Option<DVector<f64>> {
        let z = self.inner_minimizer(p[0], p[1]).ok()?;
        Some(DVector::from_vec(vec![
            2.0 * (p[0] - z[0]),
            2.0 * (p[1] - z[1]),
        ]))
    }

    /// Implicit-function theorem:
    /// `g_xx - g_xz g_zz^{-1} g_zx = 2 I - 4 g_zz^{-1}` for this `g`.
    fn hessian(&self, p: &[f64]) -> Option<DMatrix<f64>> {
        let z = self.inner_minimizer(p[0], p[1]).ok()?;
        let gzz_inv = inner_hessian(&z).try_inverse()?;
        let h = Matrix2::identity() * 2.0 - gzz_inv * 4.0;
        Some(DMatrix::from_column_slice(2, 2, h.as_slice()))
    }

    fn known_saddle(&self) -> Option<DVector<f64>> {
        Some(DVector::zeros(2))
    }
}
