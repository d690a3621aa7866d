use kakeya_core::KakeyaError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("resource guard: {0}")]
    Resource(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error(transparent)]
    Core(#[from] KakeyaError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, HarnessError>;
