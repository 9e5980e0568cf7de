//! Crate-wide error type.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A constructor or operation received an out-of-domain argument.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Paired slices that must agree in length do not.
    #[error("length mismatch: {left} vs {right} ({context})")]
    LengthMismatch {
        left: usize,
        right: usize,
        context: &'static str,
    },

    /// Every lag bin was filtered out while building an empirical variogram.
    #[error("all variogram bins are empty after filtering")]
    AllBinsEmpty,

    /// No optimizer start converged, or the fit was requested on
    /// insufficient data.
    #[error("variogram fit failed: {0}")]
    FitFailed(String),

    /// The best fit collapsed onto the sill floor (no spatial structure).
    #[error("degenerate variogram: partial sill pinned at its floor ({sill_floor:e})")]
    DegenerateVariogram { sill_floor: f64 },

    /// Log transform asked to map a non-positive shifted value.
    #[error("value {value} + offset {delta} is not positive; cannot take log")]
    NonPositiveAfterOffset { value: f64, delta: f64 },

    /// Kriging system could not be solved and the policy forbids fallback.
    #[error("singular kriging system ({0})")]
    SingularSystem(String),

    /// Bandwidth optimization needs a minimum calibration size.
    #[error("insufficient calibration data: {got} points, need at least {need}")]
    InsufficientCalibration { got: usize, need: usize },

    /// Interval bounds are inverted.
    #[error("invalid interval bounds: lower {lower} > upper {upper}")]
    InvalidBounds { lower: f64, upper: f64 },

    /// Input file does not exist.
    #[error("file not found: {0}")]
    FileNotFound(String),

    /// A required CSV column is absent from the header.
    #[error("missing column: {0}")]
    MissingColumn(String),

    /// A declared cell failed to parse as a finite number.
    #[error("bad cell at data row {row}, column {column}: {reason}")]
    BadCell {
        row: usize,
        column: String,
        reason: String,
    },

    /// Too few rows to perform the requested split.
    #[error("too few rows: {got}, need at least {need}")]
    TooFewRows { got: usize, need: usize },

    /// Covariance matrix stayed non-positive-definite even after jitter.
    #[error("covariance matrix is not positive definite")]
    CovarianceNotPd,

    /// Unknown preset name.
    #[error("unknown preset: {0}")]
    UnknownPreset(String),

    /// Underlying I/O failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// CSV-level parse failure (malformed file rather than a bad cell).
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}
