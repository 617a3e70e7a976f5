use std::path::{Path, PathBuf};

use thiserror::Error;

pub type Result<T, E = RunnerError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error("config error: {0}")]
    Config(String),

    #[error("resume mismatch: {0}")]
    ResumeMismatch(String),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{path}: {message}")]
    Artifact { path: PathBuf, message: String },

    #[error(transparent)]
    Core(#[from] critevo::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl RunnerError {
    /// Process exit status: 2 for configuration problems, 3 when a resume
    /// does not match the stored run, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunnerError::Config(_) | RunnerError::Core(critevo::Error::InvalidConfig(_)) => 2,
            RunnerError::ResumeMismatch(_) => 3,
            _ => 1,
        }
    }

    pub(crate) fn artifact(path: &Path, message: impl Into<String>) -> Self {
        RunnerError::Artifact { path: path.to_path_buf(), message: message.into() }
    }
}

pub(crate) trait IoContext<T> {
    fn at(self, path: &Path) -> Result<T>;
}

impl<T> IoContext<T> for std::io::Result<T> {
    fn at(self, path: &Path) -> Result<T> {
        self.map_err(|source| RunnerError::Io { path: path.to_path_buf(), source })
    }
}
