use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the simulation layers.
///
/// The variants map one-to-one onto the failure classes the command line
/// reports with distinct exit codes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("eigensolver did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("degenerate parameters: {0}")]
    Degenerate(String),

    #[error(
        "jump probability {probability:.4} at step {step} exceeds {limit}; reduce dt (currently {dt} µs)"
    )]
    StepSize {
        probability: f64,
        limit: f64,
        step: usize,
        dt: f64,
    },

    #[error("integrity check failed: {0}")]
    Integrity(String),

    #[error("trajectory {index} failed: {source}")]
    Trajectory {
        index: u64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Broad failure class, used for exit-code mapping.
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidArgument(_) | Error::Degenerate(_) => ErrorKind::Argument,
            Error::Capacity(_) => ErrorKind::Capacity,
            Error::Numeric(_) | Error::NoConvergence { .. } | Error::StepSize { .. } => {
                ErrorKind::Numeric
            }
            Error::Integrity(_) => ErrorKind::Integrity,
            Error::Trajectory { source, .. } => source.kind(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Argument,
    Capacity,
    Numeric,
    Integrity,
}
