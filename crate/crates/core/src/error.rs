use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = ModalError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum ModalError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// `row` is 1-based (file record), `column` is the 0-based field index.
    #[error("row {row}, column {column}: {message}")]
    Csv {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("no columns selected")]
    EmptySelection,

    #[error("sample is empty")]
    EmptySample,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid mixture: {0}")]
    InvalidMixture(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    /// The k-th neighbour distance vanished, so the density estimate is infinite.
    #[error("infinite density: k-th neighbour distance is zero")]
    InfiniteDensity,

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("degenerate fit: all {restarts} initialisations collapsed")]
    DegenerateFit { restarts: usize },

    #[error("sparse region at x = {x}: effective local weight {weight:.3e} below {required:.3e}")]
    Sparse { x: f64, weight: f64, required: f64 },

    #[error("no convergent start at x = {x}")]
    NoConvergentStart { x: f64 },

    #[error("bandwidth auto-extension exhausted after {doublings} doublings")]
    ExtensionExhausted { doublings: usize },

    #[error("estimator failed in {failed} of {total} replicates at n = {n}: {first}")]
    TooManyFailures {
        n: usize,
        failed: usize,
        total: usize,
        first: String,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl ModalError {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        ModalError::InvalidParameter(msg.into())
    }
}
