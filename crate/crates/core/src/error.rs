use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Violated layer/expert/top-K structure.
    #[error("topology error: {0}")]
    Topology(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("configuration error: {0}")]
    Configuration(String),
    /// Features or records that do not belong to the same deployment profile or key order.
    #[error("alignment error: {0}")]
    Alignment(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("fit error: {0}")]
    Fit(String),
    #[error("metric error: {0}")]
    Metric(String),
    /// Target-fold data reached a source-only fitting stage.
    #[error("target leakage: {0}")]
    Leakage(String),
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: &'static str,
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
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
