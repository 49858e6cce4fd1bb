use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("degenerate configuration during evolution: {0}")]
    Degenerate(String),
    #[error("verification failed")]
    VerifyFailed,
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] plkks::Error),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::VerifyFailed => 1,
            CliError::Usage(_) | CliError::Io { .. } => 2,
            CliError::Degenerate(_) => 3,
            CliError::Core(e) if e.is_degenerate() => 3,
            CliError::Core(plkks::Error::InvalidInput(_)) => 2,
            CliError::Core(_) => 3,
        })
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
