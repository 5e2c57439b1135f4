pub mod analysis;
pub mod cli;
pub mod eigensolver;
pub mod engine;
pub mod error;
pub mod model;
pub mod momentum;
pub mod quad;
pub mod suite;
pub mod wavefun;

pub use error::{Error, Result};
