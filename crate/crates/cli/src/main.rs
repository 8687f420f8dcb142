//! `scsa`: contrast enhancement with the 2D semi-classical signal analysis.

mod commands;
mod config;
mod error;
mod imageio;
mod report;

use clap::{Parser, Subcommand};

use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "scsa", version, about = "SCSA image reconstruction and contrast enhancement")]
struct Cli {
    /// Worker threads (default: one per logical core)
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Uniform-gamma reconstruction of the image luminance
    Reconstruct(commands::ReconstructArgs),
    /// Per-cluster gamma enhancement of a color image
    Enhance(commands::EnhanceArgs),
    /// Eight quality metrics of a test image against a reference
    Metrics(commands::MetricsArgs),
    /// NSGA-II search for (h, gammas) without writing an image
    Optimize(commands::OptimizeArgs),
    /// Enhance every image in a directory and tabulate the metrics
    Batch(commands::BatchArgs),
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    match &cli.command {
        Command::Reconstruct(a) => commands::reconstruct(a),
        Command::Enhance(a) => commands::enhance_one(a),
        Command::Metrics(a) => commands::metrics(a),
        Command::Optimize(a) => commands::optimize(a),
        Command::Batch(a) => commands::batch(a),
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
