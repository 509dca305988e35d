use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::RngStream;
use crate::linalg::Basis;
use crate::oracle::{BenchmarkSpec, ModRosenbrock, Objective, Quadratic};
use crate::saddlesearch::{SaddleConfig, StepSchedule};

fn one() -> usize {
    1
}

fn default_prefix() -> String {
    "run".into()
}

/// Where a run writes its artifacts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    #[serde(default = "default_prefix")]
    pub prefix: String,
}

/// Starting point of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StartPoint {
    Explicit(Vec<f64>),
    /// The benchmark's known saddle plus `offset` times a standard normal
    /// vector drawn from `seed`.
    NearSaddle { offset: f64, seed: u64 },
}

impl StartPoint {
    pub fn resolve(&self, obj: &Objective) -> Result<DVector<f64>> {
        let x = match self {
            StartPoint::Explicit(v) => DVector::from_column_slice(v),
            StartPoint::NearSaddle { offset, seed } => {
                let saddle = obj.known_saddle().ok_or_else(|| Error::MissingReference("known saddle".into()))?;
                let mut rng = RngStream::new(*seed);
                saddle + rng.standard_normal(obj.dim()) * *offset
            }
        };
        if x.len() != obj.dim() {
            return Err(Error::DimensionMismatch {
                expected: obj.dim(),
                got: x.len(),
            });
        }
        Ok(x)
    }
}

impl From<Vec<f64>> for StartPoint {
    fn from(v: Vec<f64>) -> Self {
        StartPoint::Explicit(v)
    }
}

/// One experiment: a benchmark, a start point, the search knobs and the
/// replica layout. Replica `i` uses seed `seed_base + i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub benchmark: BenchmarkSpec,
    pub x0: StartPoint,
    /// Initial unstable directions, one inner list per column; random when
    /// absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v0: Option<Vec<Vec<f64>>>,
    pub search: SaddleConfig,
    #[serde(default = "one")]
    pub replicas: usize,
    #[serde(default)]
    pub seed_base: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputConfig>,
}

pub(crate) fn config_err(context: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Config {
        context: context.into(),
        message: message.into(),
    }
}

/// Parses a JSON config file; every failure is a [`Error::Config`].
pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let ctx = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|e| config_err(&ctx, e.to_string()))?;
    serde_json::from_str(&text).map_err(|e| config_err(ctx, e.to_string()))
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let cfg: ExperimentConfig = load_json(path)?;
        cfg.validate()
            .map_err(|e| config_err(path.display().to_string(), e.to_string()))?;
        Ok(cfg)
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.replicas as u64).map(|i| self.seed_base + i).collect()
    }

    pub fn x0(&self, obj: &Objective) -> Result<DVector<f64>> {
        self.x0.resolve(obj)
    }

    pub fn v0(&self, dim: usize) -> Result<Basis> {
        match &self.v0 {
            None => Ok(Basis::empty(dim)),
            Some(cols) => Basis::orthonormalize(
                dim,
                cols.iter().map(|c| DVector::from_column_slice(c)).collect(),
            ),
        }
    }

    /// Builds the benchmark and checks every field against it.
    pub fn validate(&self) -> Result<Objective> {
        let obj = self.benchmark.build()?;
        self.x0(&obj)?;
        if self.replicas == 0 {
            return Err(Error::invalid("replicas must be at least 1"));
        }
        self.search.validate(obj.dim())?;
        let v0 = self.v0(obj.dim())?;
        if !v0.is_empty() && v0.k() != self.search.k {
            return Err(Error::invalid(format!(
                "v0 has {} columns, k = {}",
                v0.k(),
                self.search.k
            )));
        }
        Ok(obj)
    }
}

/// A grid of constant `(l, α)` pairs run on a shared base experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderConfig {
    pub base: ExperimentConfig,
    /// Difference lengths, typically halving.
    pub lengths: Vec<f64>,
    pub alphas: Vec<f64>,
}

impl LadderConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let cfg: LadderConfig = load_json(path)?;
        cfg.validate()
            .map_err(|e| config_err(path.display().to_string(), e.to_string()))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.lengths.is_empty() || self.alphas.is_empty() {
            return Err(Error::invalid("ladder needs at least one length and one step size"));
        }
        for rung in self.rungs() {
            rung.2.validate()?;
        }
        Ok(())
    }

    /// `(l, α, experiment)` for every grid point, `α` outermost.
    pub fn rungs(&self) -> Vec<(f64, f64, ExperimentConfig)> {
        let mut out = Vec::new();
        for &alpha in &self.alphas {
            for &l in &self.lengths {
                let mut cfg = self.base.clone();
                cfg.search = cfg.search.with_constant(alpha, l);
                out.push((l, alpha, cfg));
            }
        }
        out
    }
}

impl SaddleConfig {
    /// Copy with constant outer step `alpha` and length `l`.
    pub fn with_constant(&self, alpha: f64, l: f64) -> SaddleConfig {
        let mut c = self.clone();
        c.alpha_x = StepSchedule::Constant { alpha };
        c.length = crate::saddlesearch::LengthSchedule::Constant { l };
        c
    }
}

/// Deterministic reference run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineConfig {
    pub benchmark: BenchmarkSpec,
    pub x0: StartPoint,
    pub k: usize,
    pub alpha: StepSchedule,
    pub n_max: usize,
    #[serde(default = "one")]
    pub record_every: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputConfig>,
}

impl BaselineConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let cfg: BaselineConfig = load_json(path)?;
        cfg.validate()
            .map_err(|e| config_err(path.display().to_string(), e.to_string()))?;
        Ok(cfg)
    }

    /// Builds the benchmark and resolves the start point.
    pub fn validate(&self) -> Result<(Objective, DVector<f64>)> {
        let obj = self.benchmark.build()?;
        let x0 = self.x0.resolve(&obj)?;
        if self.k > obj.dim() {
            return Err(Error::invalid(format!("k = {} exceeds dimension {}", self.k, obj.dim())));
        }
        self.alpha.validate()?;
        Ok((obj, x0))
    }
}

/// Objective family used by the variance study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum VarianceFamily {
    /// `|x|^2 / 2` at the origin.
    Identity,
    /// Modified Rosenbrock with `s_i = -1000` for the first
    /// `min(3, d - 1)` coordinates and `1` otherwise, evaluated at
    /// `1 + offset * r` with `r` standard normal.
    RosenbrockNearSaddle { offset: f64 },
}

impl VarianceFamily {
    pub fn make(&self, d: usize, rng: &mut RngStream) -> Result<(Objective, DVector<f64>)> {
        match self {
            VarianceFamily::Identity => Ok((
                Objective::new(Quadratic::new(DMatrix::identity(d, d))?),
                DVector::zeros(d),
            )),
            VarianceFamily::RosenbrockNearSaddle { offset } => {
                let neg = 3.min(d.saturating_sub(1));
                let f = ModRosenbrock::with_pattern(d, neg, -1000.0, 1.0)?;
                let x = DVector::from_element(d, 1.0) + rng.standard_normal(d) * *offset;
                Ok((Objective::new(f), x))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VarianceConfig {
    pub family: VarianceFamily,
    pub dims: Vec<usize>,
    pub samples: usize,
    pub l: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Default for VarianceConfig {
    fn default() -> Self {
        VarianceConfig {
            family: VarianceFamily::Identity,
            dims: vec![2, 10, 50, 100],
            samples: 10_000,
            l: 1e-3,
            seed: 0,
        }
    }
}
