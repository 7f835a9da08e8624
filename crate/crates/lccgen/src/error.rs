use thiserror::Error;

/// Error type shared across the toolkit.
#[derive(Error, Debug)]
pub enum LccError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("bad file format: {0}")]
    Format(String),

    #[error("training diverged: {0}")]
    Diverged(String),

    #[error("stage order: missing upstream artifact {0}")]
    StageOrder(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("serialization: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, LccError>;
