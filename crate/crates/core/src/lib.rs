pub mod coefficients;
pub mod error;
pub mod grid;
pub mod harness;
pub mod models;
pub mod sim;
pub mod transport;

pub use error::{Error, Result};
