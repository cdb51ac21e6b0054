use thiserror::Error;

/// Errors raised by the numerical library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalorixError {
    #[error("coefficient matrix is not symmetric: |a[{row}][{col}] - a[{col}][{row}]| = {diff:e}")]
    NotSymmetric { row: usize, col: usize, diff: f64 },

    #[error("coefficient matrix is not positive definite (Cholesky pivot {index} = {pivot:e})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("invalid coefficient entries: {0}")]
    InvalidEntries(String),

    #[error("dimension {n} is too small for this operation (need n >= 3)")]
    DimensionTooSmall { n: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("coefficients cannot be represented as rationals")]
    NonRationalCoefficients,

    #[error("polynomial is not caloric; lowest-grade residual term: {term}")]
    NotCaloric { term: String },

    #[error("invalid resolution: {0}")]
    InvalidResolution(String),

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("offset {h} leaves the admissible side of the boundary")]
    OffsetTooLarge { h: f64 },

    #[error("target lies on the lateral boundary (distance {distance:e})")]
    TargetOnBoundary { distance: f64 },

    #[error("probe node at time {time} is too close to a corner of the cylinder")]
    CornerTooClose { time: f64 },

    #[error("boundary data does not match the problem: {0}")]
    RegionMismatch(String),

    #[error("degenerate boundary data: all quadrature weights vanish")]
    DegenerateData,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, CalorixError>;
