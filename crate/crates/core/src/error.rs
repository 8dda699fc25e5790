use thiserror::Error;

/// Crate-wide error type.
///
/// Variants split into input validation problems (bad arguments, malformed
/// files) and numerical failures (solvers that did not converge, degenerate
/// data). The CLI maps the former to exit code 1 and the latter to 2.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("malformed file: {0}")]
    MalformedFile(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("solver did not converge: {0}")]
    NonConvergence(String),
}

impl Error {
    /// True for errors raised while crunching numbers rather than while
    /// validating inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Numerical(_) | Error::NonConvergence(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
