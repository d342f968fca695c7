use thiserror::Error;

/// Errors raised by the model, the execution engine and the transforms.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("malformed transcript: {0}")]
    MalformedTranscript(String),
    #[error("malformed strategy: {0}")]
    MalformedStrategy(String),
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("path exceeded {max_steps} steps without stopping")]
    NonterminatingPath { max_steps: usize },
    #[error("hard caps violated: {0}")]
    CapsViolated(String),
    #[error("expectation budget violated: {0}")]
    BudgetViolated(String),
    #[error("length mismatch: {trees} trees but {weights} weights")]
    LengthMismatch { trees: usize, weights: usize },
    #[error("problem too large: {0}")]
    SizeTooLarge(String),
    #[error("unknown family `{0}`")]
    UnknownFamily(String),
    #[error("unknown suite `{0}`")]
    UnknownSuite(String),
    #[error("bad distribution: {0}")]
    BadDistribution(String),
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("arithmetic overflow: {0}")]
    Overflow(String),
    #[error("insufficient samples: need at least 2, got {0}")]
    InsufficientSamples(usize),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
