use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter {name} = {value}: {reason}")]
    ParameterDomain {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("invalid sweep design: {0}")]
    Design(String),

    #[error("invalid chip spec: {0}")]
    ChipSpec(String),

    #[error("qubit id {id} is outside the chip (capacity {capacity})")]
    QubitOutOfRange { id: u32, capacity: u32 },

    #[error("qubit {0} is not present in the data")]
    UnknownQubit(u32),

    #[error("truth does not cover operational qubits {missing:?}")]
    Coverage { missing: Vec<u32> },

    #[error("insufficient data for fit: {0}")]
    InsufficientData(String),

    #[error("{context}: {reason}")]
    InvalidData { context: String, reason: String },

    #[error("{path}: line {line}: {reason}")]
    Parse {
        path: PathBuf,
        line: u64,
        reason: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(context: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidData {
            context: context.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
