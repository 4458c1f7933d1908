use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("sum-of-exponentials construction failed: sampled error {max_error:e} exceeds tolerance {tolerance:e} after {attempts} refinements")]
    ConstructionFailure {
        max_error: f64,
        tolerance: f64,
        attempts: usize,
    },

    #[error("argument {value:e} outside the domain [{lower:e}, {upper:e}]")]
    Domain { value: f64, lower: f64, upper: f64 },

    #[error("history advanced out of order: state is at level {current}, step expects level {expected}")]
    LevelOrder { current: usize, expected: usize },

    #[error("dimension mismatch: {what} has length {got}, expected {expected}")]
    DimensionMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },

    #[error("tridiagonal solve broke down at row {row}: pivot {pivot:e}")]
    Breakdown { row: usize, pivot: f64 },

    #[error("quadrature did not reach tolerance {tolerance:e} (last change {achieved:e})")]
    ToleranceNotMet { tolerance: f64, achieved: f64 },

    #[error("malformed input at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures caused by bad input rather than by the numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. }
                | Error::Domain { .. }
                | Error::DimensionMismatch { .. }
                | Error::Parse { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
