//! Crate-wide error type.
//!
//! Numerical routines distinguish recoverable diagnostics (non-convergence
//! with a partial value attached) from domain errors (invalid parameters),
//! so callers can decide whether a partial result is still useful.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter is outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Two slices that must have equal lengths do not.
    #[error("length mismatch: {context}: {left} vs {right}")]
    LengthMismatch {
        context: &'static str,
        left: usize,
        right: usize,
    },

    /// Adaptive quadrature failed to reach the requested tolerance.
    /// `partial` is the best available estimate, `error_estimate` its
    /// estimated absolute error.
    #[error("quadrature did not converge: partial={partial:.6e} err={error_estimate:.3e}")]
    QuadratureNonConvergence { partial: f64, error_estimate: f64 },

    /// A series or infinite product failed its certified truncation test
    /// before the index cap was exhausted.
    #[error("series truncation failed at index {index}: partial={partial:.6e} tail_bound={tail_bound:.3e}")]
    TruncationFailure {
        index: usize,
        partial: f64,
        tail_bound: f64,
    },

    /// A computed probability fell outside [0, 1] by more than the allowed
    /// numerical slop, indicating an internal inconsistency.
    #[error("numerical consistency violation: value={value:.6e} outside [0,1] beyond slop {slop:.3e}")]
    NumericalConsistency { value: f64, slop: f64 },

    /// Invalid request at the command-line / sweep level (bad grid, bad
    /// flag combination, unreadable config).
    #[error("invalid request: {0}")]
    InvalidRequest(String),

    /// I/O failure while writing results.
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
