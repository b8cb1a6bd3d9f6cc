use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("matrix error: {0}")]
    Matrix(String),

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("training diverged at step {step}: {detail}")]
    TrainingDiverged { step: usize, detail: String },

    #[error("dataset parse error at line {line}: {detail}")]
    DatasetParse { line: usize, detail: String },

    #[error("audit failed: {0}")]
    AuditFailed(String),

    #[error("numerical check failed: {0}")]
    NumericalCheck(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
