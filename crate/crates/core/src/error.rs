use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("precision insufficient: {0}")]
    Precision(String),
    #[error("internal defect: {0}")]
    Defect(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Invalid(msg.into()))
}

pub(crate) fn precondition<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Precondition(msg.into()))
}

pub(crate) fn precision<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Precision(msg.into()))
}

pub(crate) fn defect<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Defect(msg.into()))
}
