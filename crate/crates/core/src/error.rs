use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpaError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration error: {0}")]
    Config(String),

    /// Estimator input for which the formula has no finite value (e.g. no
    /// common neighbours).
    #[error("undefined estimate: {0}")]
    UndefinedEstimate(String),

    #[error("node {id} has in-degree {in_deg}, below the minimum {min}")]
    BelowThreshold { id: u32, in_deg: u32, min: u32 },

    #[error("{file}:{line}: {msg}")]
    Parse { file: String, line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, SpaError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(SpaError::InvalidArgument(msg.into()))
}
