use std::path::PathBuf;

use thiserror::Error;

use crate::learners::svm::SmoSolution;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("MoCA score {0} outside [0, 30]")]
    ScoreOutOfRange(i64),

    #[error("invalid value: {0}")]
    Invalid(String),

    #[error("unknown modality `{0}`")]
    UnknownModality(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("ingestion rejected {} record(s):\n{}", .0.len(), .0.join("\n"))]
    Ingest(Vec<String>),

    #[error("training set has a single class ({0})")]
    SingleClass(usize),

    #[error("SMO did not converge after {iterations} iterations (violation {violation:.3e})")]
    SmoNotConverged {
        iterations: usize,
        violation: f64,
        best: Box<SmoSolution>,
    },

    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("unsupported schema `{0}`")]
    Schema(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
