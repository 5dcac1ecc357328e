use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input data. `line` is 1-based and counts the CSV header.
    #[error("invalid data at line {line}: {message}")]
    InvalidData { line: usize, message: String },

    #[error("invalid dataset: {0}")]
    Dataset(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("infeasible model: {0}")]
    Infeasible(String),

    /// A criterion or operation was requested outside the setting it is defined for.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
