//! File formats, configuration and commands of the `vdyn` binary.
//!
//! Every command is a plain function writing its files under an output
//! directory and its human-readable report to a `Write`, so the binary and
//! the tests drive exactly the same code.

pub mod commands;
pub mod config;
pub mod error;
pub mod formats;

pub use error::{CliError, Result};
