use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{
    Implicit2d, LinearNet, LinearNetSpec, ModRosenbrock, MullerBrown, MullerBrownParams,
    Objective, Quadratic, SumOfSines, WarmStart,
};
use crate::error::{Error, Result};

/// Arctangent coefficients of the modified Rosenbrock function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RosenbrockCoefficients {
    Explicit(Vec<f64>),
    /// `s_1..s_leading = leading_value`, the rest `rest_value`.
    Pattern {
        leading: usize,
        leading_value: f64,
        rest_value: f64,
    },
}

fn default_inner_tol() -> f64 {
    1e-12
}

fn unit_scale() -> f64 {
    1.0
}

/// A benchmark addressed by name and parameters, as written in experiment
/// configuration files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum BenchmarkSpec {
    /// `x^T A x / 2`; `matrix` is given row by row.
    Quadratic { matrix: Vec<Vec<f64>> },
    MullerBrown {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        params: Option<MullerBrownParams>,
    },
    ModRosenbrock { d: usize, s: RosenbrockCoefficients },
    #[serde(rename = "implicit_2d")]
    Implicit2d {
        #[serde(default = "default_inner_tol")]
        inner_tol: f64,
        #[serde(default)]
        warm_start: WarmStart,
    },
    LinearNet {
        widths: Vec<usize>,
        samples: usize,
        data_seed: u64,
        index_set: Vec<usize>,
        #[serde(default = "unit_scale")]
        loss_scale: f64,
    },
    SumOfSines { d: usize },
}

impl BenchmarkSpec {
    pub fn build(&self) -> Result<Objective> {
        Ok(match self {
            BenchmarkSpec::Quadratic { matrix } => {
                let n = matrix.len();
                if matrix.iter().any(|row| row.len() != n) {
                    return Err(Error::invalid("quadratic matrix must be square"));
                }
                let flat: Vec<f64> = matrix.iter().flatten().copied().collect();
                Objective::new(Quadratic::new(DMatrix::from_row_slice(n, n, &flat))?)
            }
            BenchmarkSpec::MullerBrown { params } => {
                Objective::new(MullerBrown::new(params.clone().unwrap_or_default()))
            }
            BenchmarkSpec::ModRosenbrock { d, s } => {
                let f = match s {
                    RosenbrockCoefficients::Explicit(v) => {
                        if v.len() != *d {
                            return Err(Error::invalid(format!(
                                "{} arctangent coefficients for d = {d}",
                                v.len()
                            )));
                        }
                        ModRosenbrock::new(v.clone())?
                    }
                    RosenbrockCoefficients::Pattern {
                        leading,
                        leading_value,
                        rest_value,
                    } => ModRosenbrock::with_pattern(*d, *leading, *leading_value, *rest_value)?,
                };
                Objective::new(f)
            }
            BenchmarkSpec::Implicit2d {
                inner_tol,
                warm_start,
            } => Objective::new(Implicit2d::with_warm_start(*inner_tol, *warm_start)?),
            BenchmarkSpec::LinearNet {
                widths,
                samples,
                data_seed,
                index_set,
                loss_scale,
            } => {
                let spec = LinearNetSpec::sampled(
                    widths.clone(),
                    *samples,
                    *data_seed,
                    index_set.clone(),
                    *loss_scale,
                )?;
                Objective::new(LinearNet::new(spec)?)
            }
            BenchmarkSpec::SumOfSines { d } => Objective::new(SumOfSines::new(*d)?),
        })
    }
}
