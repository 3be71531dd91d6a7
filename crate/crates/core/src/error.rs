use thiserror::Error;

/// Errors produced by the simulation toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("reference waveform has zero energy")]
    ZeroEnergyReference,
    #[error("unsupported derivative order {0} (expected 1, 2 or 3)")]
    UnsupportedOrder(u32),
    #[error("non-finite field after split step {step} of {total}")]
    NonFinite { step: usize, total: usize },
    #[error("odd bit count {0}; QPSK needs bit pairs")]
    OddBitCount(usize),
    #[error("empty training set")]
    EmptyTraining,
    #[error("length mismatch: {0} samples vs {1} labels")]
    LengthMismatch(usize, usize),
    #[error("codeword count must be positive")]
    NoCodewords,
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
