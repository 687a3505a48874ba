//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by matrix, channel, and verification operations.
#[derive(Debug, Error)]
pub enum Error {
    /// A matrix failed a structural validation (shape, finiteness, bounds).
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    /// Operand shapes are incompatible.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A scalar or configuration argument is out of range.
    #[error("invalid argument `{field}`: {message}")]
    InvalidArgument { field: String, message: String },

    /// A matrix expected to be Hermitian deviates beyond tolerance.
    #[error("matrix is not Hermitian: deviation {deviation:.3e} exceeds tolerance {tolerance:.3e}")]
    NotHermitian { deviation: f64, tolerance: f64 },

    /// A map expected to preserve Hermiticity has a non-Hermitian Choi matrix.
    #[error("map is not Hermiticity-preserving: Choi deviation from Hermitian is {0:.3e}")]
    NotHermiticityPreserving(f64),

    /// A matrix expected to be positive semidefinite has a negative eigenvalue.
    #[error("matrix is not positive semidefinite: minimum eigenvalue {0:.3e}")]
    NotPositiveSemidefinite(f64),

    /// A verification case failed a precondition; this is a diagnostic, not a
    /// pass/fail outcome.
    #[error("case rejected: {0}")]
    CaseRejected(String),

    /// JSON (de)serialization failure.
    #[error("serialization: {0}")]
    Serialization(String),

    /// Underlying I/O failure.
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn arg(field: &str, message: impl Into<String>) -> Self {
        Error::InvalidArgument {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
