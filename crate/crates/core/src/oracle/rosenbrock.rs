use nalgebra::{DMatrix, DVector};

use super::Landscape;
use crate::error::{Error, Result};

/// Rosenbrock's function with `s_i atan^2(x_i - 1)` terms added, which tune
/// the Morse index of the critical point `(1, ..., 1)`.
#[derive(Clone, Debug)]
pub struct ModRosenbrock {
    s: Vec<f64>,
}

impl ModRosenbrock {
    pub fn new(s: Vec<f64>) -> Result<Self> {
        if s.len() < 2 {
            return Err(Error::invalid("modified Rosenbrock needs d >= 2"));
        }
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("arctangent coefficients must be finite"));
        }
        Ok(ModRosenbrock { s })
    }

    /// `s_1 = ... = s_m = leading`, the rest `rest`.
    pub fn with_pattern(d: usize, m: usize, leading: f64, rest: f64) -> Result<Self> {
        if m > d {
            return Err(Error::invalid("pattern prefix longer than the dimension"));
        }
        let s = (0..d).map(|i| if i < m { leading } else { rest }).collect();
        ModRosenbrock::new(s)
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.s
    }
}

impl Landscape for ModRosenbrock {
    fn name(&self) -> &str {
        "mod_rosenbrock"
    }

    fn dim(&self) -> usize {
        self.s.len()
    }

    fn value(&mut self, x: &[f64]) -> Result<f64> {
        let mut f = 0.0;
        for i in 0..x.len() - 1 {
            let t = x[i + 1] - x[i] * x[i];
            let u = 1.0 - x[i];
            f += 100.0 * t * t + u * u;
        }
        for (xi, si) in x.iter().zip(&self.s) {
            let a = (xi - 1.0).atan();
            f += si * a * a;
        }
        Ok(f)
    }

    fn gradient(&self, x: &[f64]) -> Option<DVector<f64>> {
        let d = x.len();
        let mut g = DVector::zeros(d);
        for i in 0..d - 1 {
            let t = x[i + 1] - x[i] * x[i];
            g[i] += -400.0 * t * x[i] - 2.0 * (1.0 - x[i]);
            g[i + 1] += 200.0 * t;
        }
        for i in 0..d {
            let u = x[i] - 1.0;
            g[i] += self.s[i] * 2.0 * u.atan() / (1.0 + u * u);
        }
        Some(g)
    }

    fn hessian(&self, x: &[f64]) -> Option<DMatrix<f64>> {
        let d = x.len();
        let mut h = DMatrix::zeros(d, d);
        for i in 0..d - 1 {
            h[(i, i)] += 1200.0 * x[i] * x[i] - 400.0 * x[i + 1] + 2.0;
            h[(i + 1, i + 1)] += 200.0;
            h[(i, i + 1)] -= 400.0 * x[i];
            h[(i + 1, i)] -= 400.0 * x[i];
        }
        for i in 0..d {
            let u = x[i] - 1.0;
            let w = 1.0 + u * u;
            h[(i, i)] += self.s[i] * (2.0 - 4.0 * u * u.atan()) / (w * w);
        }
        Some(h)
    }

    fn known_saddle(&self) -> Option<DVector<f64>> {
        Some(DVector::from_element(self.s.len(), 1.0))
    }
}
