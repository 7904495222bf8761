//! Error taxonomy shared by every module.

use thiserror::Error;

/// Library-wide error type.
///
/// The split mirrors how callers should react: `Argument` means the call
/// itself was malformed, `Domain` means mathematically valid inputs lie
/// outside the region where the operation is defined (typically boundary
/// points of the simplex), `Integration` means a numerical procedure failed
/// partway through, and `Hypothesis` means an assumption of a
/// sufficient-condition check does not hold for the given data.
#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Malformed argument: dimension mismatch, invalid value, empty input.
    #[error("invalid argument: {0}")]
    Argument(String),
    /// A stepping procedure failed; `step` is the index of the failing step.
    #[error("integration failed at step {step}: {message}")]
    Integration { step: usize, message: String },
    /// A stated assumption of a theorem-backed check is violated.
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors that indicate a numerical (not usage) failure.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Domain(_) | Error::Integration { .. } | Error::Hypothesis(_)
        )
    }
}
