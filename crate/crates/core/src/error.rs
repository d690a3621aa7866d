use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KakeyaError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, KakeyaError>;
