//! Replicated experiments, summary statistics and artifact output.

mod checks;
mod config;
mod emit;
mod stats;

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::RngStream;
use crate::saddlesearch::{saddle_search, RunMetadata, RunRecord, Termination};

pub use checks::{unbiasedness_check, ComponentCheck};
pub use config::{
    load_json, BaselineConfig, StartPoint, ExperimentConfig, LadderConfig, OutputConfig, VarianceConfig,
    VarianceFamily,
};
pub use emit::{csv_header, ensure_dir, format_f64, read_trace_csv, write_json, write_trace_csv};
pub use stats::{
    fit_decay_order, fit_linear_rate, least_squares, plateau_stat, rate_from_series, step_orders,
    variance_study, LinearRate, SummaryRow, SummaryTable, VarianceRow, MIN_RATE_POINTS,
    PLATEAU_FACTOR,
};

/// Result of one replica.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplicaOutcome {
    pub seed: u64,
    pub record: RunRecord,
}

impl ReplicaOutcome {
    pub fn succeeded(&self) -> bool {
        self.record.termination.is_success()
    }
}

fn run_one(cfg: &ExperimentConfig, seed: u64) -> RunRecord {
    let attempt = || -> Result<RunRecord> {
        let mut obj = cfg.benchmark.build()?;
        let x0 = cfg.x0(&obj)?;
        let v0 = cfg.v0(obj.dim())?;
        let mut rng = RngStream::new(seed);
        saddle_search(&mut obj, &x0, &v0, &cfg.search, &mut rng)
    };
    attempt().unwrap_or_else(|e| RunRecord {
        rows: Vec::new(),
        termination: Termination::Failed {
            n: 0,
            message: e.to_string(),
        },
        metadata: RunMetadata {
            benchmark: format!("{:?}", cfg.benchmark),
            seed: Some(seed),
            ..RunMetadata::default()
        },
    })
}

/// Runs `f` on a pool of `jobs` threads (`0` = one per core).
pub fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::invalid(format!("cannot start thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Runs every replica of `cfg`, in parallel on up to `jobs` threads. Each
/// replica owns its objective and random stream. Outcomes come back in seed
/// order; failures are recorded in the outcome rather than aborting the
/// batch.
pub fn run_replicas(cfg: &ExperimentConfig, jobs: usize) -> Result<Vec<ReplicaOutcome>> {
    cfg.validate()?;
    let seeds = cfg.seeds();
    with_jobs(jobs, || {
        seeds
            .par_iter()
            .map(|&seed| ReplicaOutcome {
                seed,
                record: run_one(cfg, seed),
            })
            .collect()
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicaSummary {
    pub seed: u64,
    pub termination: Termination,
    pub iterations: usize,
    pub cumulative_evals: u64,
    pub min_dist_sq: Option<f64>,
    pub final_dist_sq: Option<f64>,
    pub min_grad_norm_sq: Option<f64>,
    pub final_grad_norm_sq: Option<f64>,
    pub wall_time_secs: f64,
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<PathBuf>,
}

impl ReplicaSummary {
    pub fn of(outcome: &ReplicaOutcome, trace: Option<PathBuf>) -> Self {
        let rec = &outcome.record;
        let last = rec.last();
        ReplicaSummary {
            seed: outcome.seed,
            termination: rec.termination.clone(),
            iterations: last.map_or(0, |r| r.n),
            cumulative_evals: last.map_or(0, |r| r.cumulative_evals),
            min_dist_sq: rec.min_dist_sq(),
            final_dist_sq: last.and_then(|r| r.dist_sq),
            min_grad_norm_sq: rec.min_grad_norm_sq(),
            final_grad_norm_sq: last.and_then(|r| r.grad_norm_sq),
            wall_time_secs: rec.metadata.wall_time_secs,
            warnings: rec.metadata.warnings.clone(),
            trace,
        }
    }
}

/// Everything needed to rerun an experiment and compare the results.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub config: ExperimentConfig,
    pub seeds: Vec<u64>,
    pub replicas: Vec<ReplicaSummary>,
    pub failures: usize,
    /// Mean per-replica minimum `dist_sq`, when a reference saddle exists.
    pub plateau: Option<f64>,
}

impl ExperimentSummary {
    pub fn new(cfg: &ExperimentConfig, outcomes: &[ReplicaOutcome], traces: &[Option<PathBuf>]) -> Self {
        let records: Vec<RunRecord> = outcomes.iter().map(|o| o.record.clone()).collect();
        ExperimentSummary {
            config: cfg.clone(),
            seeds: outcomes.iter().map(|o| o.seed).collect(),
            replicas: outcomes
                .iter()
                .enumerate()
                .map(|(i, o)| ReplicaSummary::of(o, traces.get(i).cloned().flatten()))
                .collect(),
            failures: outcomes.iter().filter(|o| !o.succeeded()).count(),
            plateau: plateau_stat(&records).ok(),
        }
    }
}

/// Trace file for one replica.
pub fn trace_path(dir: &Path, prefix: &str, seed: u64) -> PathBuf {
    dir.join(format!("{prefix}_seed{seed}.csv"))
}

/// Writes one CSV per replica plus `<prefix>_summary.json` into `dir`.
pub fn write_experiment(
    cfg: &ExperimentConfig,
    outcomes: &[ReplicaOutcome],
    dir: &Path,
    prefix: &str,
) -> Result<ExperimentSummary> {
    ensure_dir(dir)?;
    let dim = cfg.benchmark.build()?.dim();
    let mut traces = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        let path = trace_path(dir, prefix, o.seed);
        write_trace_csv(&o.record, dim, &path)?;
        traces.push(Some(path));
    }
    let summary = ExperimentSummary::new(cfg, outcomes, &traces);
    write_json(&summary, &dir.join(format!("{prefix}_summary.json")))?;
    Ok(summary)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderSummary {
    pub config: LadderConfig,
    pub table: SummaryTable,
    /// Least-squares decay order per step size.
    pub decay_orders: Vec<(f64, Option<f64>)>,
    pub failures: usize,
}

/// Runs every rung of the ladder and tabulates the plateau errors.
pub fn run_ladder(cfg: &LadderConfig, jobs: usize) -> Result<(LadderSummary, Vec<Vec<ReplicaOutcome>>)> {
    cfg.validate()?;
    let mut entries = Vec::new();
    let mut all = Vec::new();
    let mut failures = 0;
    for (l, alpha, rung) in cfg.rungs() {
        let outcomes = run_replicas(&rung, jobs)?;
        failures += outcomes.iter().filter(|o| !o.succeeded()).count();
        let records: Vec<RunRecord> = outcomes.iter().map(|o| o.record.clone()).collect();
        let plateau = plateau_stat(&records)?;
        log::info!("l = {l:e}, alpha = {alpha:e}: plateau {plateau:e}");
        entries.push((l, alpha, plateau));
        all.push(outcomes);
    }
    let table = SummaryTable::from_plateaus(&entries);
    let decay_orders = table
        .decay_orders()
        .into_iter()
        .map(|(a, r)| (a, r.ok()))
        .collect();
    Ok((
        LadderSummary {
            config: cfg.clone(),
            table,
            decay_orders,
            failures,
        },
        all,
    ))
}
