use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("{path}:{line}: parse error: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{path}:{line}: data error: {msg}")]
    Data {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("matrix is not positive definite (pivot {pivot} at row {row}); increase the shape parameter or check for duplicate nodes")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("matrix is numerically singular (pivot {pivot:e} at column {col})")]
    Singular { col: usize, pivot: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("stencil centered at node {center} is singular")]
    SingularStencil {
        center: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("patch {patch} is singular")]
    SingularPatch {
        patch: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("partition-of-unity cover: {0}")]
    Cover(String),

    #[error("non-finite value in field at step {step} (node {node})")]
    NonFinite { step: usize, node: usize },

    #[error("zero reference field; relative norm undefined")]
    ZeroReference,

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
