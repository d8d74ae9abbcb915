//! Library half of the `bonnetlab` command-line tool.

pub mod config;
pub mod error;
pub mod output;
pub mod report;
pub mod run;

pub use config::{Overrides, RunConfig};
pub use error::CliError;
pub use run::{execute, Command};
