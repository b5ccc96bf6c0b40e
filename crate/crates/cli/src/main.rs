use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use cqed_cli::{run, CliError, Format};

/// Driven atom–cavity simulations: spectra, photon correlations, blockade
/// reports, fits and parameter sweeps.
#[derive(Debug, Parser)]
#[command(name = "cqed", version)]
struct Args {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Worker threads for sweeps and quantum spectra (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.kind.exit_code())
        }
    }
}

fn execute(args: &Args) -> Result<(), CliError> {
    let bytes = std::fs::read(&args.config)
        .map_err(|e| CliError::config(format!("cannot read config {}: {e}", args.config.display())))?;
    let base_dir = args.config.parent().map(PathBuf::from).unwrap_or_default();

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = args.threads {
        if n == 0 {
            return Err(CliError::config("--threads must be at least 1"));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| CliError::io(e.to_string()))?;
    let text = pool.install(|| run(&bytes, &base_dir, args.format))?;

    match &args.out {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))
        }
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::io(e.to_string())),
    }
}
