//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("line {line}: expected {expected} columns, found {found}")]
    RaggedRow {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("line {line}: invalid number {token:?}")]
    InvalidNumber { line: usize, token: String },

    #[error("point set must contain at least one point")]
    EmptyPointSet,

    #[error("non-finite coordinate in row {row}")]
    NonFinite { row: usize },

    #[error("covariance matrix is not symmetric positive-definite")]
    NotPositiveDefinite,

    #[error("neighbor count {k} out of range for {n} points")]
    NeighborCountOutOfRange { k: usize, n: usize },

    #[error("bandwidth must be positive")]
    NonPositiveBandwidth,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("label sequences have different lengths ({a} vs {b})")]
    LabelLengthMismatch { a: usize, b: usize },

    #[error("need at least two points")]
    TooFewPoints,

    #[error("all weights are zero: degenerate support")]
    DegenerateSupport,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("image error: {0}")]
    Image(#[from] image::ImageError),
}

pub type Result<T> = std::result::Result<T, Error>;
