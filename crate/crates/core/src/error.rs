use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum CiError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("rank error: expected {expected}, found {found}")]
    Rank { expected: &'static str, found: &'static str },

    #[error("aliasing risk: {0}")]
    AliasingRisk(String),

    #[error("non-integer frequency: {0}")]
    NonIntegerFrequency(String),

    #[error("divisibility error: {0}")]
    Divisibility(String),

    #[error("constraint violation [{label}]: {detail}")]
    ConstraintViolation { label: String, detail: String },

    #[error("padding error: {0}")]
    Padding(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("missing time-derivative channel: {0}")]
    DerivativeChannelMissing(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CiError {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            CiError::AliasingRisk(_) | CiError::NonIntegerFrequency(_) | CiError::Padding(_) => 2,
            CiError::ConstraintViolation { .. } | CiError::Divisibility(_) => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CiError>;
