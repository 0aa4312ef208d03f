use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Help or version text; not a failure.
    #[error("{0}")]
    Info(String),

    #[error("{0}")]
    Usage(String),

    /// Argument-parser diagnostics, already formatted for the terminal.
    #[error("{0}")]
    Parse(String),

    #[error(transparent)]
    Core(#[from] footprint_core::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    /// 0 for help/version, 2 for I/O failures, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Info(_) => 0,
            CliError::Io { .. } | CliError::Core(footprint_core::Error::Io(_)) => 2,
            CliError::Usage(_) | CliError::Parse(_) | CliError::Core(_) => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
