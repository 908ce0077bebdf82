use thiserror::Error;

/// Errors surfaced by the workbench.
///
/// `Invalid` covers malformed inputs (user errors), `Numerical` covers
/// breakdowns of an otherwise valid computation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("singular overlap between Gaussian states (orthogonal pair)")]
    SingularOverlap,
    #[error("candidate pool exhausted, enlarge the pool: {0}")]
    PoolExhausted(String),
    #[error("post-selection accepted no shots")]
    EmptyPostSelection,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Process exit code: 1 for user errors, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numerical(_) | Error::SingularOverlap | Error::PoolExhausted(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Invalid(msg.into()))
}
