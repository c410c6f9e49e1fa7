//! File formats, configuration and commands around `tabppo-core`.

pub mod checkpoint;
pub mod config;
pub mod csvio;
pub mod error;
pub mod run;

pub use error::{Error, Result};
