use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("field file: {0}")]
    FieldFormat(String),

    #[error("state has no positive part in either component")]
    NotInEPlus,

    #[error("no sign change of the Nehari function found up to t = {t:e}")]
    BracketFailure { t: f64 },

    #[error("problem fails hypothesis check: {0}")]
    ValidationFailed(String),

    #[error("perturbation sign violation: {0}")]
    PerturbationSignViolation(String),

    #[error("invalid scale ladder: {0}")]
    InvalidScales(String),

    #[error("config line {line}, key `{key}`: {message}")]
    Config {
        line: usize,
        key: String,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
