use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("entity `{0}` already exists")]
    DuplicateEntity(String),
    #[error("relation `{0}` already exists")]
    DuplicateRelation(String),
    #[error("unknown entity `{0}`")]
    UnknownEntity(String),
    #[error("entity `{0}` must have at least one instance")]
    EmptyEntity(String),
    #[error("{what}: feature matrix has {rows} rows, expected {expected}")]
    FeatureRows {
        what: String,
        rows: usize,
        expected: usize,
    },
    #[error("relation `{0}` must link at least two entities")]
    RelationDegree(String),
    #[error(
        "relation `{relation}`: observation {position} has {got} indices, expected {expected}"
    )]
    IndexArity {
        relation: String,
        position: usize,
        got: usize,
        expected: usize,
    },
    #[error("relation `{relation}`: index {index} in mode {mode} is out of range for `{entity}` ({count} instances)")]
    IndexOutOfRange {
        relation: String,
        entity: String,
        mode: usize,
        index: usize,
        count: usize,
    },
    #[error("relation `{relation}`: duplicate observed cell {cell:?}")]
    DuplicateCell { relation: String, cell: Vec<usize> },
    #[error("relation `{relation}`: cell {cell:?} lies on the diagonal of a self-relation")]
    DiagonalObservation { relation: String, cell: Vec<usize> },
    #[error("relation `{relation}`: noise precision must be positive, got {alpha}")]
    NonPositiveAlpha { relation: String, alpha: f64 },
    #[error("model is not valid for sampling: {0}")]
    InvalidModel(String),
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(
        "matrix of dimension {dim} is not positive definite (jitter up to {max_jitter:e} tried)"
    )]
    NotPositiveDefinite { dim: usize, max_jitter: f64 },
    #[error("matrix is not symmetric (relative asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the numerical kernels (as opposed to bad input).
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NotPositiveDefinite { .. } | Error::NotSymmetric(_)
        )
    }
}
