pub mod cli;
pub mod dmc;
pub mod error;
pub mod feedback;
pub mod harness;
pub mod rician;
pub mod specfun;

pub use error::{Error, Result};
