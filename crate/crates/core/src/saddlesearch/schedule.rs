use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Step size rule `α(n)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StepSchedule {
    Constant { alpha: f64 },
    /// `α(n) = gamma / (n + m)^p`.
    PowerLaw { gamma: f64, m: f64, p: f64 },
}

impl StepSchedule {
    pub fn eval(&self, n: usize) -> f64 {
        match *self {
            StepSchedule::Constant { alpha } => alpha,
            StepSchedule::PowerLaw { gamma, m, p } => gamma / (n as f64 + m).powf(p),
        }
    }

    /// Rejects invalid parameters; returns warnings for admissible but
    /// unusual ones.
    pub fn validate(&self) -> Result<Vec<String>> {
        let mut warnings = Vec::new();
        match *self {
            StepSchedule::Constant { alpha } => {
                if !(alpha >= 0.0 && alpha.is_finite()) {
                    return Err(Error::invalid(format!("step size must be non-negative, got {alpha}")));
                }
            }
            StepSchedule::PowerLaw { gamma, m, p } => {
                if !(gamma > 0.0 && gamma.is_finite()) {
                    return Err(Error::invalid(format!("power-law gamma must be positive, got {gamma}")));
                }
                if !(m >= 1.0 && m.is_finite()) {
                    return Err(Error::invalid(format!("power-law offset must be >= 1, got {m}")));
                }
                if !p.is_finite() {
                    return Err(Error::invalid("power-law exponent must be finite"));
                }
                if !(p > 0.5 && p <= 1.0) {
                    warnings.push(format!(
                        "power-law exponent p = {p} outside (1/2, 1]: steps are not square-summable with a divergent sum"
                    ));
                }
            }
        }
        Ok(warnings)
    }
}

/// Difference length rule `l(n)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LengthSchedule {
    Constant { l: f64 },
    /// `l(n) = scale * sqrt(α(n))` for the step schedule it is paired with.
    CoupledSqrt { scale: f64 },
}

impl LengthSchedule {
    pub fn eval(&self, n: usize, step: &StepSchedule) -> f64 {
        match *self {
            LengthSchedule::Constant { l } => l,
            LengthSchedule::CoupledSqrt { scale } => scale * step.eval(n).sqrt(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let v = match *self {
            LengthSchedule::Constant { l } => l,
            LengthSchedule::CoupledSqrt { scale } => scale,
        };
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(Error::invalid(format!("difference length must be positive, got {v}")))
        }
    }
}

/// True when `l^2` is small enough that the difference quotients are
/// dominated by round-off in values of size `scale`.
pub fn roundoff_dominated(l: f64, scale: f64) -> bool {
    l * l < 1e3 * f64::EPSILON * scale.abs()
}
