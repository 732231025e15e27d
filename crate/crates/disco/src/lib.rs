//! Files and processes around `disco-core`: the config format, text
//! checkpoints, CSV/JSON/SVG artifacts and whole experiment runs.

pub mod artifacts;
pub mod checkpoint;
pub mod config;
mod error;
pub mod run;

pub use error::{Error, Result};
