pub mod channel;
pub mod construction;
pub mod decoder;
pub mod error;
pub mod harness;
pub mod llr;
pub mod polar;
pub mod rateless;
pub mod rng;

pub use error::{Error, Result};
