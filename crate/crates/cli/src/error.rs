use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("unknown sweep parameter `{0}`")]
    UnknownParameter(String),

    #[error("{path}: {message}")]
    Io { path: String, message: String },

    #[error(transparent)]
    Estimator(#[from] mvpose::Error),

    #[error("self-test failed: {0}")]
    SelftestFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::UnknownParameter(_) | CliError::Estimator(_) => 2,
            CliError::Io { .. } => 3,
            CliError::SelftestFailed(_) => 4,
        }
    }

    pub fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
