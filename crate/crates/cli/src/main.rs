//! circle-rds: experiments on random circle dynamics driven by one TOML
//! config per run. Subcommands cover stationary sampling, extremal
//! exponents, the dimension identity, entropy, synchronization and the
//! acceptance matrix. Reports are byte-stable for a fixed config; thread
//! count never changes results.

mod commands;
mod config;
mod reports;

use clap::{Parser, Subcommand};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "circle-rds",
    version,
    about = "Random circle dynamics: stationary measures, extremal exponents, dimension, verification"
)]
struct Cli {
    /// Experiment config (family-set config for verify).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Override the seed from the config. Not accepted by verify.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Output directory; overrides the [output] dir in the config.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Worker thread count (0 or absent: rayon default). Results never
    /// depend on it.
    #[arg(long, global = true, value_name = "N", env = "CIRCLE_RDS_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the attracting and repelling stationary measures to CSV.
    Stationary,
    /// Extremal derivative exponents by two routes, with the matrix-cocycle
    /// cross-check on unimodular projective families.
    Exponents,
    /// Run the dimension = entropy over contraction identity end to end.
    Dimension,
    /// Entropy of the one-step mass transport of the stationary measure.
    Entropy,
    /// Synchronization rate and collapse fraction for a start pair.
    Sync,
    /// Replay the acceptance matrix on a configured family set.
    Verify,
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if t >= 1 {
            // Ignore failure: the pool can already exist in-process.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
        }
    }
    let Some(config) = cli.config else {
        eprintln!("error: --config PATH is required");
        return 2;
    };
    let inv = commands::Invocation { config, seed: cli.seed, out: cli.out };
    let result = match cli.command {
        Command::Stationary => commands::stationary(&inv),
        Command::Exponents => commands::exponents(&inv),
        Command::Dimension => commands::dimension(&inv),
        Command::Entropy => commands::entropy(&inv),
        Command::Sync => commands::sync(&inv),
        Command::Verify => commands::verify(&inv),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
