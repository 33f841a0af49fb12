use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// The caller handed in something that violates a precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// The decoy budget leaves no interior point.
    #[error("infeasible: {0}")]
    Infeasible(String),
    /// Instance or strategy text failed to parse.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    /// An exhaustive oracle was asked to enumerate too much.
    #[error("instance too large: {0}")]
    TooLarge(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }
}
