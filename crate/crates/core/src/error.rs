use thiserror::Error;

/// Errors raised by the certification, simulation and training routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid operator: {0}")]
    InvalidOperator(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("trainable parameter slot {0} is not bound")]
    UnboundParameter(usize),

    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    #[error("invalid quantum state: {0}")]
    InvalidState(String),

    #[error("{outcomes} outcomes exceed the exact-method limit of {limit}")]
    OutcomeLimitExceeded { outcomes: usize, limit: usize },

    #[error("network has no sector-bounded hidden activation; use the product bound")]
    UseProductBound,

    #[error("unsupported encoding: {0}")]
    UnsupportedEncoding(String),

    #[error("gate `{0}` has no shift-rule parameter")]
    UnsupportedGateParam(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn dims(expected: usize, got: usize) -> Self {
        Error::DimensionMismatch { expected, got }
    }

    /// True for failures of the numerical machinery itself rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Numerical(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
