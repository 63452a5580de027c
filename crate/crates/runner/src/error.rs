use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Core(#[from] cini_core::Error),
    #[error("verification failed: {}", .0.join(", "))]
    Verification(Vec<String>),
}

impl RunError {
    /// 0 success, 1 usage/config, 2 numerical breakdown, 3 failed verification.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Usage(_) | RunError::Io { .. } => 1,
            RunError::Core(e) if e.is_numerical() => 2,
            RunError::Core(_) => 1,
            RunError::Verification(_) => 3,
        }
    }

    pub(crate) fn io(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        RunError::Io { path: path.display().to_string(), message: e.to_string() }
    }
}

pub type RunResult<T> = std::result::Result<T, RunError>;
