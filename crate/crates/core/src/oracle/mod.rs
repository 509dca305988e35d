//! Black-box objectives and the benchmark landscapes.
//!
//! Search code sees an objective only through [`Objective::eval`], which
//! counts every scalar evaluation. Analytic derivatives and known saddles are
//! carried alongside as reference data for measurement and for the
//! deterministic baseline; the zeroth-order algorithms never read them.

mod implicit;
mod linear_net;
mod muller_brown;
mod quadratic;
mod registry;
mod rosenbrock;
mod sines;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub use implicit::{Implicit2d, WarmStart};
pub use linear_net::{LinearNet, LinearNetSpec};
pub use muller_brown::{MullerBrown, MullerBrownParams};
pub use quadratic::Quadratic;
pub use registry::{BenchmarkSpec, RosenbrockCoefficients};
pub use rosenbrock::ModRosenbrock;
pub use sines::SumOfSines;

/// A scalar energy on `R^d`.
///
/// `value` must be deterministic: the same point yields the same scalar.
/// It takes `&mut self` so implementations may keep solver caches.
pub trait Landscape: Send {
    fn name(&self) -> &str;

    fn dim(&self) -> usize;

    fn value(&mut self, x: &[f64]) -> Result<f64>;

    /// Analytic gradient, when available.
    fn gradient(&self, _x: &[f64]) -> Option<DVector<f64>> {
        None
    }

    /// Analytic Hessian, when available.
    fn hessian(&self, _x: &[f64]) -> Option<DMatrix<f64>> {
        None
    }

    /// A saddle point of the landscape known in advance.
    fn known_saddle(&self) -> Option<DVector<f64>> {
        None
    }
}

/// Counting wrapper around a [`Landscape`].
pub struct Objective {
    landscape: Box<dyn Landscape>,
    evals: u64,
    last_value: Option<f64>,
}

impl std::fmt::Debug for Objective {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Objective")
            .field("landscape", &self.landscape.name())
            .field("dim", &self.landscape.dim())
            .field("evals", &self.evals)
            .finish()
    }
}

impl Objective {
    pub fn new(landscape: impl Landscape + 'static) -> Self {
        Objective::from_boxed(Box::new(landscape))
    }

    pub fn from_boxed(landscape: Box<dyn Landscape>) -> Self {
        Objective {
            landscape,
            evals: 0,
            last_value: None,
        }
    }

    pub fn name(&self) -> &str {
        self.landscape.name()
    }

    pub fn dim(&self) -> usize {
        self.landscape.dim()
    }

    /// Evaluates the objective, counting the call even when it fails.
    pub fn eval(&mut self, x: &DVector<f64>) -> Result<f64> {
        self.eval_slice(x.as_slice())
    }

    pub fn eval_slice(&mut self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        self.evals += 1;
        let value = self.landscape.value(x)?;
        if !value.is_finite() {
            return Err(Error::NonFiniteValue {
                value,
                eval: self.evals,
            });
        }
        self.last_value = Some(value);
        Ok(value)
    }

    pub fn eval_count(&self) -> u64 {
        self.evals
    }

    /// The most recent successfully evaluated value.
    pub fn last_value(&self) -> Option<f64> {
        self.last_value
    }

    pub fn reference_gradient(&self, x: &DVector<f64>) -> Option<DVector<f64>> {
        self.landscape.gradient(x.as_slice())
    }

    pub fn reference_hessian(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        self.landscape.hessian(x.as_slice())
    }

    pub fn known_saddle(&self) -> Option<DVector<f64>> {
        self.landscape.known_saddle()
    }

    pub fn landscape(&self) -> &dyn Landscape {
        self.landscape.as_ref()
    }

    pub fn landscape_mut(&mut self) -> &mut dyn Landscape {
        self.landscape.as_mut()
    }
}

/// Hessian by central differences of an analytic gradient, symmetrized.
pub(crate) fn hessian_from_gradient(
    x: &[f64],
    step: f64,
    grad: impl Fn(&[f64]) -> DVector<f64>,
) -> DMatrix<f64> {
    let d = x.len();
    let mut h = DMatrix::zeros(d, d);
    let mut probe = x.to_vec();
    for j in 0..d {
        let xj = probe[j];
        probe[j] = xj + step;
        let plus = grad(&probe);
        probe[j] = xj - step;
        let minus = grad(&probe);
        probe[j] = xj;
        let col = (plus - minus) / (2.0 * step);
        h.set_column(j, &col);
    }
    let ht = h.transpose();
    (h + ht) * 0.5
}
