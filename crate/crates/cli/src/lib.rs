//! Configuration, task dispatch and output encoding behind the `cqed`
//! command-line tool.

// `!(x > 0.0)` is used on purpose so NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod output;
pub mod tasks;

use std::path::Path;

pub use config::RunConfig;
pub use error::{CliError, ErrorKind};
pub use output::{Output, Provenance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Parses `config_bytes`, runs the task and renders it in `format`.
pub fn run(config_bytes: &[u8], base_dir: &Path, format: Format) -> Result<String, CliError> {
    let config = RunConfig::parse(config_bytes)?;
    let output = tasks::execute(&config, base_dir)?;
    let provenance = Provenance::for_config(config_bytes);
    Ok(match format {
        Format::Csv => output.to_csv(&provenance),
        Format::Json => output.to_json(&provenance),
    })
}
