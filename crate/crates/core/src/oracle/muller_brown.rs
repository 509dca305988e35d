use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use super::Landscape;
use crate::error::{Error, Result};

/// Coefficients of the four Gaussian-like terms
/// `A_i exp(a_i dx^2 + b_i dx dy + c_i dy^2)` with `dx = x - x̄_i`,
/// `dy = y - ȳ_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MullerBrownParams {
    pub amplitude: [f64; 4],
    pub a: [f64; 4],
    pub b: [f64; 4],
    pub c: [f64; 4],
    pub x_center: [f64; 4],
    pub y_center: [f64; 4],
}

impl Default for MullerBrownParams {
    fn default() -> Self {
        MullerBrownParams {
            amplitude: [-200.0, -100.0, -170.0, 15.0],
            a: [-1.0, -1.0, -6.5, 0.7],
            b: [0.0, 0.0, 11.0, 0.6],
            c: [-10.0, -10.0, -6.5, 0.7],
            x_center: [1.0, 0.0, -0.5, -1.0],
            y_center: [0.0, 0.5, 1.5, 1.0],
        }
    }
}

impl MullerBrownParams {
    fn energy(&self, x: f64, y: f64) -> f64 {
        (0..4)
            .map(|i| {
                let dx = x - self.x_center[i];
                let dy = y - self.y_center[i];
                self.amplitude[i]
                    * (self.a[i] * dx * dx + self.b[i] * dx * dy + self.c[i] * dy * dy).exp()
            })
            .sum()
    }

    fn gradient(&self, x: f64, y: f64) -> Vector2<f64> {
        let mut g = Vector2::zeros();
        for i in 0..4 {
            let dx = x - self.x_center[i];
            let dy = y - self.y_center[i];
            let e = self.amplitude[i]
                * (self.a[i] * dx * dx + self.b[i] * dx * dy + self.c[i] * dy * dy).exp();
            g[0] += e * (2.0 * self.a[i] * dx + self.b[i] * dy);
            g[1] += e * (self.b[i] * dx + 2.0 * self.c[i] * dy);
        }
        g
    }

    fn hessian(&self, x: f64, y: f64) -> Matrix2<f64> {
        let mut h = Matrix2::zeros();
        for i in 0..4 {
            let dx = x - self.x_center[i];
            let dy = y - self.y_center[i];
            let e = self.amplitude[i]
                * (self.a[i] * dx * dx + self.b[i] * dx * dy + self.c[i] * dy * dy).exp();
            let qx = 2.0 * self.a[i] * dx + self.b[i] * dy;
            let qy = self.b[i] * dx + 2.0 * self.c[i] * dy;
            h[(0, 0)] += e * (qx * qx + 2.0 * self.a[i]);
            h[(0, 1)] += e * (qx * qy + self.b[i]);
            h[(1, 1)] += e * (qy * qy + 2.0 * self.c[i]);
        }
        h[(1, 0)] = h[(0, 1)];
        h
    }

    /// Index-1 critical points inside `[-1.5, 1.2] x [-0.5, 2.0]`.
    ///
    /// Grid cells in which both gradient components change sign seed a
    /// Newton iteration on the analytic gradient; converged points with one
    /// negative Hessian eigenvalue are kept, deduplicated.
    pub fn index1_saddles(&self) -> Vec<[f64; 2]> {
        const N: usize = 270;
        let (x0, x1, y0, y1) = (-1.5, 1.2, -0.5, 2.0);
        let hx = (x1 - x0) / N as f64;
        let hy = (y1 - y0) / N as f64;
        let grads: Vec<Vec<Vector2<f64>>> = (0..=N)
            .map(|i| {
                (0..=N)
                    .map(|j| self.gradient(x0 + i as f64 * hx, y0 + j as f64 * hy))
                    .collect()
            })
            .collect();
        let changes = |i: usize, j: usize, comp: usize| {
            let corners = [
                grads[i][j][comp],
                grads[i + 1][j][comp],
                grads[i][j + 1][comp],
                grads[i + 1][j + 1][comp],
            ];
            corners.iter().any(|v| *v <= 0.0) && corners.iter().any(|v| *v >= 0.0)
        };
        let mut found: Vec<[f64; 2]> = Vec::new();
        for i in 0..N {
            for j in 0..N {
                if !(changes(i, j, 0) && changes(i, j, 1)) {
                    continue;
                }
                let start = Vector2::new(x0 + (i as f64 + 0.5) * hx, y0 + (j as f64 + 0.5) * hy);
                let Some(p) = self.newton(start) else { continue };
                let h = self.hessian(p[0], p[1]);
                let eigs = h.symmetric_eigenvalues();
                let negatives = eigs.iter().filter(|e| **e < 0.0).count();
                if negatives != 1 {
                    continue;
                }
                if found
                    .iter()
                    .all(|q| (q[0] - p[0]).hypot(q[1] - p[1]) > 1e-6)
                {
                    found.push([p[0], p[1]]);
                }
            }
        }
        found
    }

    fn newton(&self, start: Vector2<f64>) -> Option<Vector2<f64>> {
        let mut p = start;
        for _ in 0..100 {
            let g = self.gradient(p[0], p[1]);
            if g.norm() < 1e-12 {
                return Some(p);
            }
            let step = self.hessian(p[0], p[1]).lu().solve(&g)?;
            p -= step;
            if !p.iter().all(|v| v.is_finite()) || p.norm() > 10.0 {
                return None;
            }
        }
        (self.gradient(p[0], p[1]).norm() < 1e-12).then_some(p)
    }
}

/// Location used to pick the reference saddle among the index-1 critical
/// points (the transition state between the two deepest minima).
const SADDLE_HINT: [f64; 2] = [-0.822, 0.624];

fn default_saddle() -> [f64; 2] {
    static CACHE: OnceLock<[f64; 2]> = OnceLock::new();
    *CACHE.get_or_init(|| {
        nearest_saddle(&MullerBrownParams::default()).expect("default potential has a saddle")
    })
}

fn nearest_saddle(params: &MullerBrownParams) -> Option<[f64; 2]> {
    params.index1_saddles().into_iter().min_by(|p, q| {
        let dp = (p[0] - SADDLE_HINT[0]).hypot(p[1] - SADDLE_HINT[1]);
        let dq = (q[0] - SADDLE_HINT[0]).hypot(q[1] - SADDLE_HINT[1]);
        dp.total_cmp(&dq)
    })
}

/// The two-dimensional Müller-Brown potential.
#[derive(Clone, Debug)]
pub struct MullerBrown {
    params: MullerBrownParams,
    saddle: Option<[f64; 2]>,
}

impl MullerBrown {
    pub fn new(params: MullerBrownParams) -> Self {
        let saddle = if params == MullerBrownParams::default() {
            Some(default_saddle())
        } else {
            nearest_saddle(&params)
        };
        MullerBrown { params, saddle }
    }

    pub fn params(&self) -> &MullerBrownParams {
        &self.params
    }
}

impl Default for MullerBrown {
    fn default() -> Self {
        MullerBrown::new(MullerBrownParams::default())
    }
}

impl Landscape for MullerBrown {
    fn name(&self) -> &str {
        "muller_brown"
    }

    fn dim(&self) -> usize {
        2
    }

    fn value(&mut self, x: &[f64]) -> Result<f64> {
        if x.len() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: x.len(),
            });
        }
        Ok(self.params.energy(x[0], x[1]))
    }

    fn gradient(&self, x: &[f64]) -> Option<DVector<f64>> {
        let g = self.params.gradient(x[0], x[1]);
        Some(DVector::from_column_slice(g.as_slice()))
    }

    fn hessian(&self, x: &[f64]) -> Option<DMatrix<f64>> {
        let h = self.params.hessian(x[0], x[1]);
        Some(DMatrix::from_column_slice(2, 2, h.as_slice()))
    }

    fn known_saddle(&self) -> Option<DVector<f64>> {
        self.saddle.map(|s| DVector::from_column_slice(&s))
    }
}
