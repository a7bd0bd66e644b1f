use std::path::PathBuf;

/// Errors returned by the solvers and the experiment runner.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid path data: {0}")]
    InvalidPath(String),

    #[error("paths were not stored for node {0}")]
    PathsNotStored(usize),

    #[error("scheme violation at t = {time}: {reason}")]
    SchemeViolation { time: f64, reason: String },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("sub-run `{run}` failed: {source}")]
    SubRun {
        run: String,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error on {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
