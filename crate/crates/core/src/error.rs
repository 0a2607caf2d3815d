use thiserror::Error;

use crate::{agent::AgentError, cityworld::WorldError, neural::NeuralError, radiomap::RadioError, transfer::TransferError};

/// Crate-level error, wrapping each module's own error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Radio(#[from] RadioError),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Transfer(#[from] TransferError),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Short stable label for machine-readable error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Radio(_) => "radio",
            Error::World(_) => "world",
            Error::Neural(_) => "neural",
            Error::Agent(_) => "agent",
            Error::Transfer(_) => "transfer",
            Error::Config(_) => "config",
            Error::Io { .. } => "io",
            Error::Csv(_) => "csv",
            Error::Invalid(_) => "invalid",
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io { path: path.as_ref().display().to_string(), source }
    }
}
