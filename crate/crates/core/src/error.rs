use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {lhs:?} vs {rhs:?}")]
    Shape {
        op: &'static str,
        lhs: (usize, usize),
        rhs: (usize, usize),
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("degenerate series: {0}")]
    DegenerateSeries(String),

    #[error("R² undefined: y_true is constant")]
    R2Undefined,

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("weights file: {0}")]
    Weights(String),

    #[error("training aborted at epoch {epoch}, batch {batch}: {reason}")]
    TrainingAborted {
        epoch: usize,
        batch: usize,
        reason: String,
    },

    #[error("forecast aborted at step {step}: {reason}")]
    ForecastAborted { step: usize, reason: String },

    #[error("{model}: {source}")]
    Model {
        model: String,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
