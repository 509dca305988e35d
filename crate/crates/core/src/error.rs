use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("objective returned a non-finite value ({value}) at evaluation #{eval}")]
    NonFiniteValue { value: f64, eval: u64 },

    #[error("inner minimization did not converge at ({x}, {y}) after {iterations} iterations (residual {residual:e})")]
    InnerSolver {
        x: f64,
        y: f64,
        iterations: usize,
        residual: f64,
    },

    #[error("eigenvector search aborted after {steps} consecutive degenerate steps on direction {direction}")]
    DegenerateCascade { direction: usize, steps: usize },

    #[error("landscape `{0}` provides no analytic derivatives")]
    MissingReference(String),

    #[error("{context}: {message}")]
    Config { context: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
