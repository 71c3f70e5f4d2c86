use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("invalid mask: every entry is masked")]
    AllMasked,

    #[error("contract violation: {0}")]
    Contract(String),

    /// Malformed record in an input file, with its 1-based line number.
    #[error("data error at line {line}: {msg}")]
    Data { line: usize, msg: String },

    /// Data-level problem not tied to a single input line.
    #[error("data error: {0}")]
    Invalid(String),

    #[error("probe error: {0}")]
    Probe(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }
}
