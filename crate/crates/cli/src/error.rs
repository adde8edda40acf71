use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error(transparent)]
    Model(#[from] contact_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("oracle check failed: {0}")]
    Check(String),
}

impl CliError {
    /// Process exit code: 2 for anything the user can fix in the input.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Model(e) => match e {
                contact_core::Error::InvalidParameter { .. }
                | contact_core::Error::NotNested { .. }
                | contact_core::Error::RingTooLarge(_)
                | contact_core::Error::SiteOutsideRing { .. } => 2,
                _ => 1,
            },
            CliError::Io { .. } | CliError::Check(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

pub(crate) fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}
