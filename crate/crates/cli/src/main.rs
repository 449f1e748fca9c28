use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use entangle_cli::commands::{self, Outcome};
use entangle_cli::config::{LoadedConfig, SweepAxis};
use entangle_cli::exit_code;
use entangle_core::{Error, Result};

/// Simulate, optimize and analyze entanglement of two driven oscillators in a common bath.
///
/// Exit status: 0 success, 2 invalid configuration, 3 propagation or
/// numerical failure, 4 i/o or output validation failure, 5 malformed input
/// file, 64 command-line usage error.
#[derive(Parser, Debug)]
#[command(name = "entangle", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (TOML); defaults apply when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding `output_dir` in the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Random seed, overriding `seed` in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Concurrent sweep points.
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Propagate the configured pulse and write time series, covariance and Wigner grids.
    Simulate,
    /// Optimize the drive pulse and write the report, best pulse and its trajectory.
    Optimize,
    /// One optimization per value of a parameter, with a summary table.
    Sweep {
        /// beta, eta, t_f or n_segments
        #[arg(long)]
        axis: Option<String>,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        values: Option<Vec<f64>>,
    },
    /// Diagnostics of a covariance snapshot.
    Analyze {
        snapshot: PathBuf,
    },
}

fn run(cli: Cli) -> Result<Outcome> {
    let mut loaded = match &cli.config {
        Some(path) => LoadedConfig::load(path)?,
        None => LoadedConfig::defaults(),
    };
    if let Some(seed) = cli.seed {
        loaded.config.seed = seed;
    }
    loaded.validate()?;
    let out = match &cli.out {
        Some(out) => {
            loaded.config.output_dir = out.clone();
            out.clone()
        }
        None => loaded.output_dir(),
    };
    match cli.command {
        Command::Simulate => commands::simulate(&loaded, &out),
        Command::Optimize => commands::optimize(&loaded.config, &out),
        Command::Sweep { axis, values } => {
            let axis = match axis {
                Some(a) => a.parse::<SweepAxis>()?,
                None => loaded.config.sweep.axis,
            };
            let values = values.unwrap_or_else(|| loaded.config.sweep.values.clone());
            let workers = match cli.workers {
                Some(0) => return Err(Error::Usage("--workers must be >= 1".into())),
                Some(k) => k,
                None => std::thread::available_parallelism().map_or(1, |n| n.get()),
            };
            commands::sweep(&loaded.config, &out, axis, &values, workers)
        }
        Command::Analyze { snapshot } => commands::analyze(&snapshot, &loaded.config, &out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 64 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            println!("wrote {} files to {}", outcome.files.len(), outcome.dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
