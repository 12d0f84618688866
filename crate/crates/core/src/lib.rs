pub mod channel;
pub mod codebook;
pub mod error;

pub use error::{Error, Result};
pub mod bitalloc;
pub mod cli;
pub mod evaluate;
pub mod quantizer;
