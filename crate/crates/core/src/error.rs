use thiserror::Error;

/// Errors raised by the analytic pipeline, the Monte Carlo engine and the CLI.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular jet: reciprocal of a jet with zero constant term")]
    SingularJet,

    #[error("accuracy target not reached: {0}")]
    Accuracy(String),

    #[error("no convergence: {0}")]
    Convergence(String),

    #[error("numerical failure at z = {z}: {reason}")]
    NumericalFailure { z: String, reason: String },

    #[error("near-singular matrix (condition estimate {0:.3e})")]
    NearSingular(f64),

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("geometry mismatch: {0}")]
    GeometryMismatch(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit status for the `density` command: 1 for bad input or
    /// configuration, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_) | Error::Config(_) | Error::GeometryMismatch(_) | Error::Io(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
