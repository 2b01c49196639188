use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by ingestion, metric computation, and report I/O.
#[derive(Debug, Error)]
pub enum EvalError {
    /// A cell of the prediction table could not be interpreted.
    #[error("parse error at line {line}, column `{column}`: {message}")]
    Parse {
        line: u64,
        column: String,
        message: String,
    },

    /// The table does not match the requested column mapping.
    #[error("schema error: {0}")]
    Schema(String),

    /// The metric has no value for this input (e.g. ROC without negatives).
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    /// A caller violated an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    /// A synthetic generator spec cannot produce both classes.
    #[error("degenerate generator spec: {0}")]
    DegenerateSpec(String),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Any other error, tagged with the file it came from.
    #[error("{}: {source}", path.display())]
    InFile {
        path: PathBuf,
        #[source]
        source: Box<EvalError>,
    },

    #[error("malformed JSON in {}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl EvalError {
    pub(crate) fn undefined(msg: impl Into<String>) -> Self {
        EvalError::UndefinedMetric(msg.into())
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        EvalError::Contract(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        EvalError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_file(path: impl Into<PathBuf>, source: EvalError) -> Self {
        EvalError::InFile {
            path: path.into(),
            source: Box::new(source),
        }
    }

    /// True for failures of the filesystem rather than of the input contents.
    pub fn is_io(&self) -> bool {
        match self {
            EvalError::Io { .. } => true,
            EvalError::InFile { source, .. } => source.is_io(),
            _ => false,
        }
    }
}

pub type Result<T, E = EvalError> = std::result::Result<T, E>;
