pub mod analytic;
pub mod cli;
pub mod error;
pub mod montecarlo;
pub mod optics;
pub mod protocol;
pub mod qstate;
pub mod verify;

pub use error::{Error, Result};
