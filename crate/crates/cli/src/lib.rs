//! Library side of the `meterdp` command: argument types, dataset loading and
//! the JSON report.

pub mod dataset;
pub mod rational;
pub mod run;

pub use dataset::load_dataset;
pub use rational::parse_rational;
pub use run::{execute, AuditMode, Mode, Params, Report, RunConfig};

/// Errors surfaced by the command, each with its process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Invalid parameters or an inconsistent configuration.
    #[error("{0}")]
    Domain(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: row {row}, column {column}: {message}")]
    Parse {
        path: String,
        row: u64,
        column: usize,
        message: String,
    },
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Domain(_) => 2,
            CliError::Io { .. } | CliError::Parse { .. } => 3,
            CliError::Internal(_) => 1,
        }
    }
}

impl From<meterdp::Error> for CliError {
    fn from(e: meterdp::Error) -> Self {
        match e {
            meterdp::Error::Domain(msg) => CliError::Domain(msg),
            other => CliError::Internal(other.to_string()),
        }
    }
}

impl From<meterdp_audit::AuditError> for CliError {
    fn from(e: meterdp_audit::AuditError) -> Self {
        match e {
            meterdp_audit::AuditError::Mechanism(inner) => inner.into(),
            other => CliError::Internal(other.to_string()),
        }
    }
}
