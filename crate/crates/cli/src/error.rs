use std::path::PathBuf;

use thiserror::Error;

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("invalid input: {0}")]
    Input(String),
    #[error("{0} gate(s) failed")]
    Gate(usize),
    #[error(transparent)]
    Numerical(#[from] purity_core::Error),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn config(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        CliError::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }

    /// 0 success, 2 configuration or input error, 3 gate failure, 4 numerical
    /// or runtime failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Input(_) => 2,
            CliError::Gate(_) => 3,
            CliError::Numerical(_) | CliError::Io { .. } | CliError::Csv(_) => 4,
        }
    }
}
