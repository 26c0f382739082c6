use thiserror::Error;

use crate::selection::SelectionViolation;

/// Errors raised by the scheduling and detection routines.
#[derive(Debug, Error)]
pub enum TdmError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {actual} ({context})")]
    DimensionMismatch {
        expected: usize,
        actual: usize,
        context: &'static str,
    },

    #[error("{what} index {index} out of range 1..={max}")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        max: usize,
    },

    #[error("target coincides with the reference position of vehicle {vehicle}; direction is undefined")]
    UndefinedDirection { vehicle: usize },

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("invalid schedule: {0}")]
    InvalidSelection(SelectionViolation),

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("malformed matrix file: {0}")]
    MatrixFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl TdmError {
    /// True for failures of the numerical kernels (factorization, eigensolver).
    pub fn is_numerical(&self) -> bool {
        matches!(self, TdmError::Factorization(_) | TdmError::Eigensolver(_))
    }
}

pub type Result<T> = std::result::Result<T, TdmError>;
