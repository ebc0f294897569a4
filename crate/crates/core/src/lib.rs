pub mod classical;
pub mod error;
pub mod evolution;
pub mod runner;
pub mod smatrix;
pub mod states;
pub mod stats;

pub use error::{Error, Result};
