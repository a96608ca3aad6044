use thiserror::Error;

/// Errors raised by the optimizers, problems and diagnostics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument violates the operation's precondition on its values or shapes.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The operation was called on an object in the wrong state,
    /// e.g. a population whose costs have not been evaluated.
    #[error("invalid state: {0}")]
    State(String),

    /// A covariance matrix could not be factorized.
    #[error("factorization failed: covariance has eigenvalue {eigenvalue:e} (not positive semidefinite)")]
    NotPositiveSemidefinite { eigenvalue: f64 },

    /// A covariance matrix that must be strictly positive definite is singular.
    #[error("factorization failed: matrix is not positive definite")]
    Singular,

    /// The objective returned a non-finite cost.
    #[error("objective returned {value} at iteration {iteration}, particle {particle}")]
    Evaluation {
        iteration: usize,
        particle: usize,
        value: f64,
    },

    /// A theoretical formula was evaluated outside its validity region.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Environment generation could not satisfy its placement constraints.
    #[error("environment generation failed: {0}")]
    Generation(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
