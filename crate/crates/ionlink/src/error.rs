use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unstable: {0}")]
    Instability(String),
    #[error("did not converge: {0}")]
    NonConvergence(String),
    #[error("step size: {0}")]
    StepSize(String),
    #[error("insufficient span: {0}")]
    InsufficientSpan(String),
    #[error("probabilities not normalized: {0}")]
    Unnormalized(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("insufficient tomography settings: {0}")]
    InsufficientSettings(String),
    #[error("missing parity {0}")]
    MissingParity(String),
    #[error("singular inversion: {0}")]
    Singular(String),
    #[error("herald has zero probability")]
    ZeroProbability,
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("channel {channel} out of range at line {line}")]
    ChannelRange { line: usize, channel: u64 },
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
