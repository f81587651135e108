use thiserror::Error;

/// Errors produced by the numerical routines of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration mismatch: vector belongs to configuration {found:#018x}, expected {expected:#018x}")]
    ConfigurationMismatch { expected: u64, found: u64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("empty ensemble")]
    EmptyEnsemble,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("integration diverged in replica {replica} at step {step} (site {site})")]
    IntegrationDiverged {
        replica: usize,
        step: usize,
        site: usize,
    },

    #[error("series hypothesis violated: theta = {theta} must be < 1/p = {bound}")]
    SeriesDivergence { theta: f64, bound: f64 },

    #[error("series did not reach the tail tolerance within {terms} terms")]
    SeriesTruncation { terms: usize },

    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid configuration: {}", .0.join("; "))]
    Validation(Vec<String>),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
