use thiserror::Error;

/// Errors produced by the simulator, the builders and the training drivers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit index {index} out of range for a {n_qubits}-qubit register")]
    QubitOutOfRange { index: usize, n_qubits: usize },

    #[error("qubit {0} appears more than once in the same gate or subset")]
    RepeatedQubit(usize),

    #[error("qubit count mismatch: expected {expected}, got {actual}")]
    QubitCountMismatch { expected: usize, actual: usize },

    #[error("bitstring has length {len} but the register has {n_qubits} qubits")]
    BitstringLength { len: usize, n_qubits: usize },

    #[error("invalid character {0:?} in bitstring")]
    InvalidBit(char),

    #[error("expected {expected} parameters, got {actual}")]
    ParamCount { expected: usize, actual: usize },

    #[error("{n_qubits} qubits exceeds the limit of {limit} for this operation")]
    TooLarge { n_qubits: usize, limit: usize },

    /// The input lies outside the domain on which a quantity is defined
    /// (odd qubit count for the n-tangle, non-positive ball radius, ...).
    #[error("outside domain: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
