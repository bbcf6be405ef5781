use thiserror::Error;

/// Errors raised by tensor construction and graph evaluation.
#[derive(Debug, Error)]
pub enum CxError {
    #[error("shape mismatch in {op}: {detail}")]
    ShapeMismatch { op: &'static str, detail: String },
    #[error("contract violation in {op}: {detail}")]
    Contract { op: &'static str, detail: String },
    #[error("numeric failure in {op}: {detail}")]
    Numeric { op: &'static str, detail: String },
    #[error("i/o failure in {op}: {source}")]
    Io {
        op: &'static str,
        #[source]
        source: std::io::Error,
    },
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, CxError>;

impl CxError {
    pub fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        CxError::ShapeMismatch { op, detail: detail.into() }
    }
    pub fn contract(op: &'static str, detail: impl Into<String>) -> Self {
        CxError::Contract { op, detail: detail.into() }
    }
    pub fn numeric(op: &'static str, detail: impl Into<String>) -> Self {
        CxError::Numeric { op, detail: detail.into() }
    }
    pub fn io(op: &'static str, source: std::io::Error) -> Self {
        CxError::Io { op, source }
    }
}
