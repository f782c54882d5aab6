use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Crate-wide error type. The CLI maps variants onto exit codes:
/// Config -> 2, Numeric/Linalg -> 3, Validation -> 4.
#[derive(Debug, Error)]
pub enum Error {
    /// Bad parameters, malformed config files, unknown keys.
    #[error("config error: {0}")]
    Config(String),

    /// Quadrature breakdown, Lanczos breakdown, non-convergence, domain violations.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// A self-check or validation suite failed.
    #[error("validation failed: {0}")]
    Validation(String),

    #[error("linear algebra backend: {0}")]
    Linalg(#[from] ndarray_linalg::error::LinalgError),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// Process exit code for the CLI: 2 config, 3 numeric, 4 validation.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Validation(_) => 4,
            _ => 3,
        }
    }

    /// Prefix the message with the pipeline stage that raised it. Exit-code
    /// mapping is preserved (backend variants already map to 3).
    pub fn with_stage(self, stage: &str) -> Error {
        match self {
            Error::Config(m) => Error::Config(format!("[{stage}] {m}")),
            Error::Validation(m) => Error::Validation(format!("[{stage}] {m}")),
            Error::Numeric(m) => Error::Numeric(format!("[{stage}] {m}")),
            other => Error::Numeric(format!("[{stage}] {other}")),
        }
    }
}
