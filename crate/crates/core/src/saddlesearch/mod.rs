//! Outer saddle search: reflected two-point gradient steps with the unstable
//! subspace tracked by the inner eigenvector search, plus the deterministic
//! discretized saddle dynamics used as a reference.

mod deterministic;
mod record;
mod schedule;

use std::time::Instant;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::eigensearch::{eigen_search_with, EigenSearchConfig, InnerContext};
use crate::error::{Error, Result};
use crate::estimators::{grad_estimate, RngStream};
use crate::linalg::Basis;
use crate::oracle::Objective;

pub use deterministic::deterministic_saddle_search;
pub use record::{RunMetadata, RunRecord, Termination, TraceRow};
pub use schedule::{roundoff_dominated, LengthSchedule, StepSchedule};

/// Iterates with `|x| > DIVERGENCE_FACTOR * (1 + |x0|)` abort the run.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

fn default_true() -> bool {
    true
}

fn default_stride() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SaddleConfig {
    pub k: usize,
    pub n_x_max: usize,
    pub alpha_x: StepSchedule,
    pub length: LengthSchedule,
    pub inner: EigenSearchConfig,
    /// Start each inner search from the previous basis.
    #[serde(default = "default_true")]
    pub warm_start: bool,
    /// Record every `record_every`-th iteration (the last one always).
    #[serde(default = "default_stride")]
    pub record_every: usize,
}

impl SaddleConfig {
    /// Constant steps and lengths with a fixed-iteration inner search; the
    /// inner search uses the outer length.
    pub fn constant(k: usize, n_x_max: usize, alpha_x: f64, l: f64, n_v_max: usize, alpha_v: f64) -> Self {
        SaddleConfig {
            k,
            n_x_max,
            alpha_x: StepSchedule::Constant { alpha: alpha_x },
            length: LengthSchedule::Constant { l },
            inner: EigenSearchConfig::fixed(k, n_v_max, alpha_v, l),
            warm_start: true,
            record_every: 1,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<Vec<String>> {
        if self.k == 0 || self.k >= dim {
            return Err(Error::invalid(format!(
                "index k = {} must lie in [1, {}]",
                self.k,
                dim.saturating_sub(1)
            )));
        }
        if self.inner.k != self.k {
            return Err(Error::invalid(format!(
                "inner search index {} differs from outer index {}",
                self.inner.k, self.k
            )));
        }
        if self.record_every == 0 {
            return Err(Error::invalid("record_every must be at least 1"));
        }
        let mut warnings = self.alpha_x.validate()?;
        self.length.validate()?;
        warnings.extend(self.inner.validate(dim)?);
        Ok(warnings)
    }

    /// Evaluations consumed by `n` outer iterations under fixed-iteration
    /// inner stopping.
    pub fn fixed_evals(&self, n: usize) -> u64 {
        n as u64 * (2 + 4 * self.k as u64 * self.inner.n_v_max as u64)
    }
}

/// `x - α (I - 2 V V^T) g`.
pub fn saddle_step(x: &DVector<f64>, v: &Basis, g: &DVector<f64>, alpha: f64) -> DVector<f64> {
    x - v.reflect(g) * alpha
}

/// Squared distance to the known saddle and squared analytic gradient norm.
pub(crate) fn measure(obj: &Objective, x: &DVector<f64>, saddle: Option<&DVector<f64>>) -> (Option<f64>, Option<f64>) {
    let finite = x.iter().all(|v| v.is_finite());
    let dist = saddle.map(|s| if finite { (x - s).norm_squared() } else { f64::NAN });
    let grad = if finite {
        obj.reference_gradient(x).map(|g| g.norm_squared())
    } else {
        None
    };
    (dist, grad)
}

pub(crate) fn warn_all(warnings: &[String]) {
    for w in warnings {
        log::warn!("{w}");
    }
}

/// Derivative-free search for an index-`k` saddle from `x0`.
///
/// `v0` seeds the unstable-subspace estimate used by the first step; an
/// empty basis means random unit vectors. Runtime failures end the trace
/// early and are reported in [`RunRecord::termination`]; only invalid inputs
/// return `Err`.
pub fn saddle_search(
    obj: &mut Objective,
    x0: &DVector<f64>,
    v0: &Basis,
    cfg: &SaddleConfig,
    rng: &mut RngStream,
) -> Result<RunRecord> {
    let d = obj.dim();
    if x0.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: x0.len() });
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("initial point is not finite"));
    }
    let mut warnings = cfg.validate(d)?;
    warn_all(&warnings);
    let v0 = if v0.is_empty() {
        Basis::orthonormalize(d, (0..cfg.k).map(|_| rng.unit_vector(d)).collect())?
    } else if v0.dim() != d || v0.k() != cfg.k {
        return Err(Error::invalid(format!(
            "initial basis is {}x{}, expected {d}x{}",
            v0.dim(),
            v0.k(),
            cfg.k
        )));
    } else {
        v0.clone()
    };

    let started = Instant::now();
    let start_evals = obj.eval_count();
    let saddle = obj.known_saddle();
    let bound = DIVERGENCE_FACTOR * (1.0 + x0.norm());
    let mut rows = Vec::with_capacity(cfg.n_x_max / cfg.record_every + 2);
    let (dist_sq, grad_norm_sq) = measure(obj, x0, saddle.as_ref());
    rows.push(TraceRow {
        n: 0,
        x: x0.as_slice().to_vec(),
        dist_sq,
        grad_norm_sq,
        cumulative_evals: 0,
    });

    let mut x = x0.clone();
    let mut basis = v0;
    let mut roundoff_warned = false;
    let mut termination = Termination::Completed;
    for n in 0..cfg.n_x_max {
        let l = cfg.length.eval(n, &cfg.alpha_x);
        let step = (|| -> Result<(DVector<f64>, Basis)> {
            let r = rng.standard_normal(d);
            let g = grad_estimate(obj, &x, &r, l)?;
            let next = saddle_step(&x, &basis, &g, cfg.alpha_x.eval(n));
            if !next.iter().all(|v| v.is_finite()) || next.norm() > bound {
                return Ok((next, basis.clone()));
            }
            let start = if cfg.warm_start { basis.clone() } else { Basis::empty(d) };
            let ctx = InnerContext {
                length_override: Some(l),
                outer_step: n,
            };
            let (found, _) = eigen_search_with(obj, &next, &start, &cfg.inner, ctx, rng)?;
            Ok((next, found))
        })();
        let (next, found) = match step {
            Ok(pair) => pair,
            Err(e) => {
                termination = Termination::Failed {
                    n: n + 1,
                    message: e.to_string(),
                };
                break;
            }
        };
        if !roundoff_warned {
            if let Some(f) = obj.last_value() {
                if roundoff_dominated(l, f) {
                    let msg = format!("difference length {l:e} is round-off dominated for |f| = {:e}", f.abs());
                    log::warn!("{msg}");
                    warnings.push(msg);
                    roundoff_warned = true;
                }
            }
        }
        x = next;
        basis = found;
        let diverged = !x.iter().all(|v| v.is_finite()) || x.norm() > bound;
        let last = n + 1 == cfg.n_x_max;
        if diverged || last || (n + 1) % cfg.record_every == 0 {
            let (dist_sq, grad_norm_sq) = measure(obj, &x, saddle.as_ref());
            rows.push(TraceRow {
                n: n + 1,
                x: x.as_slice().to_vec(),
                dist_sq,
                grad_norm_sq,
                cumulative_evals: obj.eval_count() - start_evals,
            });
        }
        if diverged {
            termination = Termination::Diverged { n: n + 1 };
            break;
        }
    }

    Ok(RunRecord {
        rows,
        termination,
        metadata: RunMetadata {
            benchmark: obj.name().to_string(),
            seed: Some(rng.seed()),
            wall_time_secs: started.elapsed().as_secs_f64(),
            config: serde_json::to_value(cfg).unwrap_or_default(),
            warnings,
        },
    })
}
