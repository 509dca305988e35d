//! Deflated stochastic eigenvector search for the `k` unstable directions of
//! the Hessian at a fixed point, driven by Hessian-vector estimates only.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{deflated_batch_residual, hess_vec_estimate, RngStream};
use crate::linalg::{modified_gram_schmidt, symmetric_spectral_norm, Basis};
use crate::oracle::Objective;
use crate::saddlesearch::{LengthSchedule, StepSchedule};

/// Norm below which an update is treated as having annihilated `v`.
pub const DEGENERATE_NORM: f64 = 1e-12;

/// Consecutive degenerate steps tolerated before the search aborts.
pub const MAX_DEGENERATE_RUN: usize = 10;

/// Multiplier applied to the inner step schedule.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaScaling {
    #[default]
    Unscaled,
    /// Divide by the dimension `d`.
    InverseDim,
}

/// Sample count for the batch residual.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BatchRule {
    Fixed { m: usize },
    /// `m_n = ceil(c * n^p)` at outer iteration `n` (counted from 1).
    Growth { c: f64, p: f64 },
}

impl BatchRule {
    pub fn size(&self, outer_step: usize) -> usize {
        match *self {
            BatchRule::Fixed { m } => m.max(1),
            BatchRule::Growth { c, p } => {
                let n = (outer_step + 1) as f64;
                ((c * n.powf(p)).ceil() as usize).max(1)
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Stopping {
    /// Run exactly `n_v_max` steps per direction.
    #[default]
    FixedIterations,
    /// Stop a direction once `|(I - v v^T - sum u u^T) mean(H_v)| < tolerance`,
    /// checked after every step.
    ResidualBatch { tolerance: f64, batch: BatchRule },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EigenSearchConfig {
    pub k: usize,
    pub n_v_max: usize,
    pub alpha_v: StepSchedule,
    #[serde(default)]
    pub alpha_scaling: AlphaScaling,
    pub length: LengthSchedule,
    #[serde(default)]
    pub stopping: Stopping,
}

impl EigenSearchConfig {
    /// Fixed-iteration search with a constant step and length.
    pub fn fixed(k: usize, n_v_max: usize, alpha_v: f64, l: f64) -> Self {
        EigenSearchConfig {
            k,
            n_v_max,
            alpha_v: StepSchedule::Constant { alpha: alpha_v },
            alpha_scaling: AlphaScaling::Unscaled,
            length: LengthSchedule::Constant { l },
            stopping: Stopping::FixedIterations,
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
        let warnings = self.alpha_v.validate()?;
        self.length.validate()?;
        if let Stopping::ResidualBatch { tolerance, batch } = &self.stopping {
            if !(*tolerance > 0.0) {
                return Err(Error::invalid("residual tolerance must be positive"));
            }
            match *batch {
                BatchRule::Fixed { m: 0 } => {
                    return Err(Error::invalid("batch size must be at least 1"));
                }
                BatchRule::Growth { c, p } if !(c > 0.0 && p.is_finite()) => {
                    return Err(Error::invalid("batch growth needs c > 0 and finite p"));
                }
                _ => {}
            }
        }
        Ok(warnings)
    }

    fn step(&self, n: usize, dim: usize) -> f64 {
        let a = self.alpha_v.eval(n);
        match self.alpha_scaling {
            AlphaScaling::Unscaled => a,
            AlphaScaling::InverseDim => a / dim as f64,
        }
    }
}

/// Per-call knobs supplied by the outer search.
#[derive(Clone, Copy, Debug, Default)]
pub struct InnerContext {
    /// Difference length used for every step instead of the configured
    /// schedule.
    pub length_override: Option<f64>,
    /// Outer iteration index for the batch growth rule.
    pub outer_step: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EigenDiagnostics {
    /// Steps taken for each direction.
    pub iterations: Vec<usize>,
    /// Degenerate steps seen for each direction.
    pub degenerate_steps: Vec<usize>,
    /// Last batch residual norm per direction (residual stopping only).
    pub residual_norms: Vec<Option<f64>>,
    /// Whether the residual criterion fired per direction.
    pub converged: Vec<bool>,
    pub evals: u64,
}

/// One projected update `normalize(v - α (I - v v^T - sum d d^T) h)`.
///
/// Returns the new vector and whether the step was degenerate, in which case
/// `v` comes back unchanged.
pub fn eigen_step(v: &DVector<f64>, deflate: &Basis, h: &DVector<f64>, alpha: f64) -> (DVector<f64>, bool) {
    let mut g = deflate.project_out(h);
    let coef = v.dot(h);
    g.axpy(-coef, v, 1.0);
    let w = v - g * alpha;
    let norm = w.norm();
    if norm < DEGENERATE_NORM || !norm.is_finite() {
        return (v.clone(), true);
    }
    (w / norm, false)
}

/// Runs the eigenvector search at `x` from `v0` (empty for random starts).
pub fn eigen_search(
    obj: &mut Objective,
    x: &DVector<f64>,
    v0: &Basis,
    cfg: &EigenSearchConfig,
    rng: &mut RngStream,
) -> Result<(Basis, EigenDiagnostics)> {
    eigen_search_with(obj, x, v0, cfg, InnerContext::default(), rng)
}

pub fn eigen_search_with(
    obj: &mut Objective,
    x: &DVector<f64>,
    v0: &Basis,
    cfg: &EigenSearchConfig,
    ctx: InnerContext,
    rng: &mut RngStream,
) -> Result<(Basis, EigenDiagnostics)> {
    let d = obj.dim();
    if x.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: x.len() });
    }
    if v0.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: v0.dim() });
    }
    cfg.validate(d)?;
    if !v0.is_empty() && v0.k() != cfg.k {
        return Err(Error::invalid(format!(
            "initial basis has {} columns, search wants {}",
            v0.k(),
            cfg.k
        )));
    }
    let start_evals = obj.eval_count();
    let mut columns: Vec<DVector<f64>> = if v0.is_empty() {
        (0..cfg.k).map(|_| rng.unit_vector(d)).collect()
    } else {
        v0.columns().to_vec()
    };
    let mut diag = EigenDiagnostics::default();

    for j in 0..cfg.k {
        let found = Basis::from_orthonormal(d, columns[..j].to_vec());
        let mut v = found.project_out(&columns[j]);
        let norm = v.norm();
        v = if norm > DEGENERATE_NORM {
            v / norm
        } else {
            found.project_out(&rng.unit_vector(d)).normalize()
        };

        let mut steps = 0;
        let mut degenerate = 0;
        let mut run = 0;
        let mut residual = None;
        let mut converged = false;
        for n in 0..cfg.n_v_max {
            let l = ctx
                .length_override
                .unwrap_or_else(|| cfg.length.eval(n, &cfg.alpha_v));
            let r = rng.standard_normal(d);
            let h = hess_vec_estimate(obj, x, &v, &r, l)?;
            let (next, flagged) = eigen_step(&v, &found, &h, cfg.step(n, d));
            steps += 1;
            if flagged {
                degenerate += 1;
                run += 1;
                if run > MAX_DEGENERATE_RUN {
                    return Err(Error::DegenerateCascade { direction: j, steps: run });
                }
            } else {
                run = 0;
                v = next;
            }
            if let Stopping::ResidualBatch { tolerance, batch } = &cfg.stopping {
                let m = batch.size(ctx.outer_step);
                let res = deflated_batch_residual(obj, x, &v, &found, l, m, rng)?.norm();
                residual = Some(res);
                if res < *tolerance {
                    converged = true;
                    break;
                }
            }
        }
        columns[j] = v;
        diag.iterations.push(steps);
        diag.degenerate_steps.push(degenerate);
        diag.residual_norms.push(residual);
        diag.converged.push(converged);
    }

    modified_gram_schmidt(&mut columns)?;
    diag.evals = obj.eval_count() - start_evals;
    Ok((Basis::from_orthonormal(d, columns), diag))
}

/// Spectral norm of `V V^T - W W^T`.
pub fn subspace_distance(v: &Basis, w: &Basis) -> Result<f64> {
    if v.dim() != w.dim() {
        return Err(Error::DimensionMismatch { expected: v.dim(), got: w.dim() });
    }
    if v.k() != w.k() {
        return Err(Error::invalid(format!("bases have {} and {} columns", v.k(), w.k())));
    }
    Ok(symmetric_spectral_norm(&(v.projector() - w.projector())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::Quadratic;

    fn vec(v: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(v)
    }

    fn basis(cols: &[&[f64]]) -> Basis {
        let d = cols[0].len();
        Basis::orthonormalize(d, cols.iter().map(|c| vec(c)).collect()).unwrap()
    }

    #[test]
    fn zero_step_leaves_v() {
        let v = vec(&[0.6, 0.8]);
        let (w, flagged) = eigen_step(&v, &Basis::empty(2), &vec(&[3.0, -1.0]), 0.0);
        assert_eq!(w, v);
        assert!(!flagged);
    }

    #[test]
    fn parallel_sample_is_projected_away() {
        let v = vec(&[0.6, 0.8]);
        let (w, _) = eigen_step(&v, &Basis::empty(2), &(&v * 5.0), 0.3);
        assert!((w - v).amax() < 1e-15);
    }

    #[test]
    fn hand_computed_update() {
        let (w, _) = eigen_step(&vec(&[1.0, 0.0]), &Basis::empty(2), &vec(&[0.0, 1.0]), 0.5);
        let s = 1.25f64.sqrt();
        assert!((w - vec(&[1.0 / s, -0.5 / s])).amax() < 1e-15);
    }

    #[test]
    fn deflated_directions_are_removed() {
        let defl = basis(&[&[0.0, 0.0, 1.0]]);
        let v = vec(&[1.0, 0.0, 0.0]);
        let (w, _) = eigen_step(&v, &defl, &vec(&[0.0, 0.0, 4.0]), 1.0);
        assert_eq!(w, v);
    }

    #[test]
    fn annihilating_step_is_flagged() {
        // v - α (I - v v^T) h = 0 cannot happen for unit v, but a non-finite
        // sample must not poison the iterate.
        let v = vec(&[1.0, 0.0]);
        let (w, flagged) = eigen_step(&v, &Basis::empty(2), &vec(&[0.0, f64::INFINITY]), 1.0);
        assert!(flagged);
        assert_eq!(w, v);
    }

    #[test]
    fn subspace_distance_examples() {
        let e1 = basis(&[&[1.0, 0.0]]);
        let e2 = basis(&[&[0.0, 1.0]]);
        assert_eq!(subspace_distance(&e1, &e1).unwrap(), 0.0);
        assert!((subspace_distance(&e1, &e2).unwrap() - 1.0).abs() < 1e-14);
        assert!(subspace_distance(&e1, &e1.negated()).unwrap() < 1e-15);
        let e12 = basis(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]);
        assert!(subspace_distance(&e1, &e12).is_err());
    }

    #[test]
    fn zero_iterations_returns_reorthonormalized_start() {
        let mut obj = Objective::new(Quadratic::diagonal(&[-2.0, 1.0, 3.0]).unwrap());
        let v0 = Basis::from_orthonormal(3, vec![vec(&[1.0, 0.0, 0.0]), vec(&[1e-3, 1.0, 0.0]).normalize()]);
        let cfg = EigenSearchConfig::fixed(2, 0, 0.1, 1e-4);
        let mut rng = RngStream::new(0);
        let (v, diag) = eigen_search(&mut obj, &DVector::zeros(3), &v0, &cfg, &mut rng).unwrap();
        assert!(v.orthonormality_error() < 1e-14);
        let e12 = basis(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]);
        assert!(subspace_distance(&v, &e12).unwrap() < 1e-12);
        assert_eq!(diag.evals, 0);
    }

    #[test]
    fn fixed_iteration_accounting() {
        let mut obj = Objective::new(Quadratic::diagonal(&[-2.0, 1.0, 3.0, 4.0]).unwrap());
        let cfg = EigenSearchConfig::fixed(2, 37, 0.01, 1e-3);
        let mut rng = RngStream::new(1);
        let (_, diag) = eigen_search(&mut obj, &DVector::zeros(4), &Basis::empty(4), &cfg, &mut rng).unwrap();
        assert_eq!(diag.evals, 4 * 2 * 37);
        assert_eq!(obj.eval_count(), 4 * 2 * 37);
        assert_eq!(diag.iterations, vec![37, 37]);
    }

    #[test]
    fn index_must_be_below_dimension() {
        let mut obj = Objective::new(Quadratic::diagonal(&[-2.0, 1.0]).unwrap());
        let mut rng = RngStream::new(1);
        for k in [0, 2] {
            let cfg = EigenSearchConfig::fixed(k, 5, 0.01, 1e-3);
            assert!(eigen_search(&mut obj, &DVector::zeros(2), &Basis::empty(2), &cfg, &mut rng).is_err());
        }
    }

    #[test]
    fn finds_smallest_direction_with_constant_step() {
        let mut obj = Objective::new(Quadratic::diagonal(&[-2.0, 1.0, 3.0]).unwrap());
        let cfg = EigenSearchConfig::fixed(1, 3000, 0.01, 1e-4);
        let mut rng = RngStream::new(3);
        let (v, _) = eigen_search(&mut obj, &DVector::zeros(3), &Basis::empty(3), &cfg, &mut rng).unwrap();
        assert!(v.column(0)[0].abs() > 0.99, "{}", v.column(0));
    }

    #[test]
    fn growth_rule_sizes() {
        let g = BatchRule::Growth { c: 10.0, p: 1.5 };
        assert_eq!(g.size(0), 10);
        assert_eq!(g.size(3), 80);
        assert_eq!(BatchRule::Fixed { m: 0 }.size(9), 1);
    }
}
