//! Error types shared across the crate.

use std::path::PathBuf;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by the benchmarking pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Input data violates a structural invariant (lengths, signs, NaN, model sets).
    #[error("validation: {0}")]
    Validation(String),

    /// A model name was not found where one was required.
    #[error("unknown model `{0}`")]
    UnknownModel(String),

    /// An argument is outside its mathematical domain.
    #[error("domain: {0}")]
    Domain(String),

    /// A requested problem size exceeds a hard capacity limit.
    #[error("capacity: {0}")]
    Capacity(String),

    /// A file could not be parsed; carries the offending location.
    #[error("parse error in {path}, line {line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    /// An estimator could not be fit on the given realization.
    #[error("estimation: {0}")]
    Estimation(String),

    /// A pipeline stage failed; wraps the underlying error.
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Wrap an error with the pipeline stage it occurred in.
    pub fn in_stage(self, stage: &str) -> Error {
        Error::Stage {
            stage: stage.to_string(),
            source: Box::new(self),
        }
    }

    /// True for errors that represent bad input rather than a runtime failure.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Validation(_)
            | Error::UnknownModel(_)
            | Error::Domain(_)
            | Error::Capacity(_)
            | Error::Parse { .. } => true,
            Error::Stage { source, .. } => source.is_validation(),
            _ => false,
        }
    }
}
