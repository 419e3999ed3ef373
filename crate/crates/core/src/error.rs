use thiserror::Error;

/// Failure modes shared by every solver and certification routine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("model error: {0}")]
    Model(String),
    #[error("not uniformly positive: {0}")]
    NotPositive(String),
    #[error("hypothesis analogue fails: {0}")]
    Hypothesis(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("internal consistency error: {0}")]
    Internal(String),
}

impl Error {
    /// True for failures that mean "the model does not satisfy a certified property",
    /// as opposed to malformed input.
    pub fn is_certification_failure(&self) -> bool {
        matches!(
            self,
            Error::NotPositive(_) | Error::Hypothesis(_) | Error::Model(_) | Error::Internal(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn dim_check(what: &str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension(format!("{what}: expected {expected}, got {got}")))
    }
}
