use thiserror::Error;

/// Errors raised by the simulator library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("value out of domain: {0}")]
    Domain(String),

    #[error("index {index} out of range for {what} (size {size})")]
    IndexOutOfRange { what: &'static str, index: u64, size: u64 },

    #[error("search budget exceeded: codebook has {required} codewords, cap is {cap}")]
    SearchBudgetExceeded { required: u128, cap: u64 },

    #[error("dimension mismatch: {0}")]
    Shape(String),

    #[error("invalid beam set: {0}")]
    InvalidBeamSet(String),

    #[error("training diverged: {0}")]
    NonFinite(String),
}

pub type Result<T> = std::result::Result<T, Error>;
