use thiserror::Error;

use crate::policy::PolicyError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown domain `{0}`")]
    UnknownDomain(String),

    #[error("invalid generator input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("validation aborted: {0}")]
    Validation(String),

    #[error("malformed instance: {0}")]
    Instance(String),

    #[error(transparent)]
    Policy(#[from] PolicyError),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("{0}")]
    Domain(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code used by the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Resource(_) => 3,
            Error::Policy(_) => 4,
            Error::Io(_) | Error::Csv(_) => 1,
            _ => 2,
        }
    }
}
