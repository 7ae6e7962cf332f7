//! File formats, thread-parallel evaluators and the command-line front end
//! for [`phasecon_core`].

pub mod cli;
pub mod error;
pub mod format;
pub mod parallel;
pub mod tables;

pub use error::{exit, CliError, CliResult};
