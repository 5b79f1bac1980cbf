//! File formats and command-line front end for `qblock-core`.

pub mod cli;
pub mod error;
pub mod format;
pub mod pack;

pub use error::{exit, CliError};
