//! Command-line front end: argument parsing, commands, and the on-disk
//! artifact formats they write.

pub mod args;
pub mod artifact;
pub mod commands;
pub mod error;
mod reference;

pub use error::{CliError, Result};
