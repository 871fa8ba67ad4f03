use thiserror::Error;

use crate::container::ContainerError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("0^0 is undefined in GF(2^8)")]
    ZeroToZeroPower,

    #[error("matrix dimension mismatch: {left_rows}x{left_cols} times {right_rows}x{right_cols}")]
    DimensionMismatch {
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },

    #[error("matrix data has {got} entries, expected {expected}")]
    MatrixShape { expected: usize, got: usize },

    #[error("generated inverse S-box disagrees with the forward table at {index:#04x}")]
    SBoxCrossCheck { index: u8 },

    #[error("key must be 16 bytes, got {0}")]
    KeyLength(usize),

    #[error("block must be 16 bytes, got {0}")]
    BlockLength(usize),

    #[error("batch contains no messages")]
    EmptyBatch,

    #[error("message {index} is empty")]
    EmptyMessage { index: usize },

    #[error("malformed batch: {0}")]
    MalformedBatch(String),

    #[error("IV set has {got} rows, batch has {expected} messages")]
    IvCountMismatch { expected: usize, got: usize },

    #[error("ciphertext length {0} is not a positive multiple of 16")]
    CiphertextLength(usize),

    #[error("worker count must be at least 1")]
    ZeroWorkers,

    #[error("invalid worker count: {0}")]
    InvalidWorkers(String),

    #[error("a worker thread panicked")]
    WorkerPanicked,

    #[error("invalid sweep configuration: {0}")]
    InvalidSweep(String),

    #[error("known-answer check failed: {0}")]
    SelfTestFailed(String),

    #[error(transparent)]
    Container(#[from] ContainerError),
}
