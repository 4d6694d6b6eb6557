//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {context}: expected {expected}, got {got}")]
    ShapeMismatch {
        context: &'static str,
        expected: String,
        got: String,
    },

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("mask contains non-binary value {value} at ({h}, {w})")]
    NonBinaryMask { value: f64, h: usize, w: usize },

    #[error("activation tape is stale: parameters changed since the forward pass")]
    StaleTape,

    #[error("not enough samples for {context}: need at least {need}, got {got}")]
    InsufficientSamples {
        context: &'static str,
        need: usize,
        got: usize,
    },

    #[error("{context}: size {got} too small, minimum is {min}")]
    TooSmall {
        context: &'static str,
        min: usize,
        got: usize,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("bad file format: {0}")]
    Format(String),

    #[error("checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    CrcMismatch { stored: u32, computed: u32 },
}

pub type Result<T> = std::result::Result<T, Error>;
