use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Core(#[from] final_iterate::Error),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            Self::Usage(_) => ExitCode::from(2),
            Self::Io(_) | Self::Core(final_iterate::Error::Io(_)) => ExitCode::from(3),
            Self::Core(
                final_iterate::Error::InvalidParameter(_)
                | final_iterate::Error::InvalidProfile(_)
                | final_iterate::Error::DimensionMismatch { .. }
                | final_iterate::Error::InfeasibleStart,
            ) => ExitCode::from(2),
            Self::Core(_) => ExitCode::from(1),
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
