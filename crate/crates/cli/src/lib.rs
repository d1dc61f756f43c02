//! The `hetdet` command-line front end.
//!
//! Each subcommand resolves a [`config::RunConfig`] from flags, an optional
//! TOML file and defaults, runs one experiment, and writes long-format CSV
//! files plus a `manifest.json` into the output directory.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::Parser;

pub use config::{Cli, RunConfig};
pub use error::{CliError, CliResult};

/// Parses `args` (program name first), runs the experiment, and returns the
/// written paths.
pub fn run_from<I, T>(args: I) -> CliResult<Vec<PathBuf>>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Config(e.to_string()))?;
    commands::execute(&cli.resolve()?)
}
