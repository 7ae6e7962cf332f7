use std::path::PathBuf;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const VALIDATION_FAILED: i32 = 1;
    pub const IO_OR_FORMAT: i32 = 2;
    pub const INVALID_PARAMS: i32 = 3;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Format(String),
    #[error("invalid parameters: {0}")]
    Invalid(String),
    #[error("quadrature and Monte Carlo estimates disagree")]
    ValidationFailed,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Format(_) => exit::IO_OR_FORMAT,
            CliError::Invalid(_) => exit::INVALID_PARAMS,
            CliError::ValidationFailed => exit::VALIDATION_FAILED,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// A core error found while reading a file is a format problem.
    pub fn format_in(path: &std::path::Path, err: impl std::fmt::Display) -> Self {
        CliError::Format(format!("{}: {err}", path.display()))
    }
}

impl From<phasecon_core::Error> for CliError {
    fn from(err: phasecon_core::Error) -> Self {
        CliError::Invalid(err.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
