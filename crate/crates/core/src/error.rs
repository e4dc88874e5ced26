use thiserror::Error;

use crate::trace::QubitId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("unknown qubit {0}")]
    UnknownQubit(QubitId),

    #[error("inconsistent trace: {0}")]
    InconsistentTrace(String),

    #[error("round cap of {cap} rounds exceeded")]
    RoundCapExceeded { cap: u64 },

    #[error("trace has {qubits} qubits, the dense oracle is capped at {cap}")]
    TooManyQubits { qubits: usize, cap: usize },

    #[error("state is not Bell-diagonal (off-diagonal residue {0:e})")]
    NotBellDiagonal(f64),

    #[error("unsupported segment count {0}")]
    UnsupportedSegments(u32),

    #[error("no samples to aggregate")]
    EmptySamples,

    #[error("singular linear system while solving the Markov chain")]
    SingularSystem,

    #[error("sample {index}: {source}")]
    Sample {
        index: u64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(name: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.to_owned(),
            reason: reason.into(),
        }
    }

    pub(crate) fn inconsistent(reason: impl Into<String>) -> Self {
        Error::InconsistentTrace(reason.into())
    }
}
