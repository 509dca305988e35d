use serde::{Deserialize, Serialize};

/// One recorded outer iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub n: usize,
    pub x: Vec<f64>,
    /// `|x - x*|^2` against the landscape's known saddle.
    pub dist_sq: Option<f64>,
    /// `|grad f(x)|^2` from the analytic gradient.
    pub grad_norm_sq: Option<f64>,
    pub cumulative_evals: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Termination {
    Completed,
    /// The iterate left the guard ball or became non-finite at step `n`.
    Diverged { n: usize },
    /// An evaluation or inner search failed at step `n`.
    Failed { n: usize, message: String },
}

impl Termination {
    pub fn is_success(&self) -> bool {
        matches!(self, Termination::Completed)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub benchmark: String,
    pub seed: Option<u64>,
    pub wall_time_secs: f64,
    /// Configuration the run was produced from.
    pub config: serde_json::Value,
    pub warnings: Vec<String>,
}

/// Trace of one search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub rows: Vec<TraceRow>,
    pub termination: Termination,
    pub metadata: RunMetadata,
}

impl RunRecord {
    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    pub fn dist_sq(&self) -> Option<Vec<f64>> {
        self.rows.iter().map(|r| r.dist_sq).collect()
    }

    pub fn grad_norm_sq(&self) -> Option<Vec<f64>> {
        self.rows.iter().map(|r| r.grad_norm_sq).collect()
    }

    /// Smallest finite `dist_sq` over the trace.
    pub fn min_dist_sq(&self) -> Option<f64> {
        min_finite(self.rows.iter().map(|r| r.dist_sq))
    }

    pub fn min_grad_norm_sq(&self) -> Option<f64> {
        min_finite(self.rows.iter().map(|r| r.grad_norm_sq))
    }
}

fn min_finite(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    values
        .flatten()
        .filter(|v| v.is_finite())
        .min_by(f64::total_cmp)
}
