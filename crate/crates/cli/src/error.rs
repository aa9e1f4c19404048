use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("{0}")]
    Convergence(spinmeter::Error),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// A cross-route check ran but did not meet its tolerance.
    #[error("{0}")]
    CheckFailed(String),

    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Internal(_) => 1,
            CliError::Config(_) => 2,
            CliError::Convergence(_) => 3,
            CliError::Io { .. } => 4,
            CliError::CheckFailed(_) => 5,
        })
    }
}

impl From<spinmeter::Error> for CliError {
    fn from(e: spinmeter::Error) -> Self {
        use spinmeter::Error as E;
        match e {
            E::Convergence { .. } => CliError::Convergence(e),
            E::Domain(m) | E::Resource(m) | E::DomainSize(m) => CliError::Config(m),
            E::Consistency(m) => CliError::Internal(m),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
