use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("validation failed:\n{0}")]
    Validation(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("{0}")]
    Input(String),
}

impl CliError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io { .. } | CliError::Input(_) => 2,
            CliError::Validation(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<macau_core::Error> for CliError {
    fn from(e: macau_core::Error) -> Self {
        use macau_core::Error as E;
        if e.is_numeric() {
            return CliError::Numeric(e.to_string());
        }
        match e {
            E::Io { .. } | E::Parse { .. } => CliError::Input(e.to_string()),
            E::InvalidParameter(_) => CliError::Config(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
