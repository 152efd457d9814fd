use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum RmtError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("timestamps not strictly increasing at row {row} ({prev} then {next})")]
    NonMonotoneTimestamps { row: usize, prev: String, next: String },

    #[error("zero surviving assets")]
    NoSurvivingAssets,

    #[error("nonpositive price {value} for asset {asset} at row {row}")]
    NonPositivePrice { asset: String, row: usize, value: f64 },

    #[error("zero-variance return series for asset {0}")]
    ZeroVariance(String),

    #[error("matrix not symmetric: |a[{i}][{j}] - a[{j}][{i}]| = {gap:e}")]
    NotSymmetric { i: usize, j: usize, gap: f64 },

    #[error("eigensolver failed to converge for eigenvalue {0}")]
    NoConvergence(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("Painleve II integration diverged near s = {location:.4} (q = {value:e})")]
    PainleveBlowUp { location: f64, value: f64 },

    #[error("{x} outside the solved range [{lo}, {hi}]")]
    OutOfRange { x: f64, lo: f64, hi: f64 },

    #[error("degenerate ensemble: {0}")]
    Degenerate(String),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, RmtError>;

pub(crate) fn invalid(msg: impl Into<String>) -> RmtError {
    RmtError::InvalidParameter(msg.into())
}
