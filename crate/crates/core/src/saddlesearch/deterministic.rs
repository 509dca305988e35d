use std::time::Instant;

use nalgebra::DVector;

use super::{measure, RunMetadata, RunRecord, StepSchedule, Termination, TraceRow, DIVERGENCE_FACTOR};
use crate::error::{Error, Result};
use crate::linalg::sorted_symmetric_eigen;
use crate::oracle::Objective;

/// Eigenvalue gap below which the unstable subspace is reported as
/// ill-defined.
const GAP_TOL: f64 = 1e-12;

/// Explicit Euler discretization of the saddle dynamics,
/// `x <- x - α(n) (I - 2 sum v_i v_i^T) grad f(x)`, with `v_i` the `k`
/// lowest Hessian eigenvectors recomputed densely at every step.
///
/// Needs the analytic gradient and Hessian. Eigenvector signs are aligned
/// with the previous step. Rows are recorded every `record_every` steps.
pub fn deterministic_saddle_search(
    obj: &Objective,
    x0: &DVector<f64>,
    k: usize,
    alpha: &StepSchedule,
    n_max: usize,
    record_every: usize,
) -> Result<RunRecord> {
    let d = obj.dim();
    if x0.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: x0.len() });
    }
    if k == 0 || k >= d {
        return Err(Error::invalid(format!("index k = {k} must lie in [1, {}]", d - 1)));
    }
    if record_every == 0 {
        return Err(Error::invalid("record_every must be at least 1"));
    }
    let mut warnings = alpha.validate()?;
    super::warn_all(&warnings);
    if obj.reference_gradient(x0).is_none() || obj.reference_hessian(x0).is_none() {
        return Err(Error::MissingReference(obj.name().to_string()));
    }

    let started = Instant::now();
    let saddle = obj.known_saddle();
    let bound = DIVERGENCE_FACTOR * (1.0 + x0.norm());
    let mut rows = Vec::new();
    let row = |n: usize, x: &DVector<f64>| {
        let (dist_sq, grad_norm_sq) = measure(obj, x, saddle.as_ref());
        TraceRow {
            n,
            x: x.as_slice().to_vec(),
            dist_sq,
            grad_norm_sq,
            cumulative_evals: 0,
        }
    };
    rows.push(row(0, x0));

    let mut x = x0.clone();
    let mut previous: Option<Vec<DVector<f64>>> = None;
    let mut gap_warned = false;
    let mut termination = Termination::Completed;
    for n in 0..n_max {
        let (Some(g), Some(h)) = (obj.reference_gradient(&x), obj.reference_hessian(&x)) else {
            termination = Termination::Failed {
                n,
                message: "reference derivatives unavailable".into(),
            };
            break;
        };
        let (values, vectors) = sorted_symmetric_eigen(&h);
        if !gap_warned && (values[k] - values[k - 1]).abs() < GAP_TOL {
            let msg = format!(
                "eigenvalues {k} and {} are degenerate (gap {:e}) at step {n}",
                k + 1,
                (values[k] - values[k - 1]).abs()
            );
            log::warn!("{msg}");
            warnings.push(msg);
            gap_warned = true;
        }
        let mut basis: Vec<DVector<f64>> = (0..k).map(|i| vectors.column(i).into_owned()).collect();
        if let Some(prev) = &previous {
            for (v, p) in basis.iter_mut().zip(prev) {
                if v.dot(p) < 0.0 {
                    v.neg_mut();
                }
            }
        }
        let mut step = g.clone();
        for v in &basis {
            step.axpy(-2.0 * v.dot(&g), v, 1.0);
        }
        x -= step * alpha.eval(n);
        previous = Some(basis);

        let diverged = !x.iter().all(|v| v.is_finite()) || x.norm() > bound;
        if diverged || n + 1 == n_max || (n + 1) % record_every == 0 {
            rows.push(row(n + 1, &x));
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
            seed: None,
            wall_time_secs: started.elapsed().as_secs_f64(),
            config: serde_json::json!({
                "k": k,
                "alpha": alpha,
                "n_max": n_max,
                "record_every": record_every,
            }),
            warnings,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::Quadratic;

    #[test]
    fn quadratic_matches_linear_recursion() {
        // A = diag(1, -1): the reflected field is -(x1, x2), so each
        // coordinate contracts by (1 - α) per step.
        let obj = Objective::new(Quadratic::diagonal(&[1.0, -1.0]).unwrap());
        let alpha = 0.1;
        let rec = deterministic_saddle_search(
            &obj,
            &DVector::from_column_slice(&[0.5, 0.5]),
            1,
            &StepSchedule::Constant { alpha },
            50,
            1,
        )
        .unwrap();
        for row in &rec.rows {
            let expected = 0.5 * (1.0 - alpha).powi(row.n as i32);
            assert!((row.x[0] - expected).abs() < 1e-15);
            assert!((row.x[1] - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_step_is_stationary() {
        let obj = Objective::new(Quadratic::diagonal(&[1.0, -1.0]).unwrap());
        let x0 = DVector::from_column_slice(&[0.5, -0.25]);
        let rec = deterministic_saddle_search(&obj, &x0, 1, &StepSchedule::Constant { alpha: 0.0 }, 10, 1).unwrap();
        assert!(rec.rows.iter().all(|r| r.x == x0.as_slice()));
    }

    #[test]
    fn needs_reference_derivatives() {
        struct Opaque;
        impl crate::oracle::Landscape for Opaque {
            fn name(&self) -> &str {
                "opaque"
            }
            fn dim(&self) -> usize {
                2
            }
            fn value(&mut self, _x: &[f64]) -> Result<f64> {
                Ok(0.0)
            }
        }
        let obj = Objective::new(Opaque);
        let err = deterministic_saddle_search(&obj, &DVector::zeros(2), 1, &StepSchedule::Constant { alpha: 0.1 }, 3, 1)
            .unwrap_err();
        assert!(matches!(err, Error::MissingReference(_)));
    }
}
