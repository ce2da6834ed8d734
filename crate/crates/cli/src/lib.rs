//! The `ffno` command line: dataset generation, training, evaluation,
//! benchmarking and diagnostics on top of `ffno-core`.

pub mod commands;
pub mod config;
pub mod error;
pub mod log;
pub mod manifest;

use clap::{Parser, Subcommand};

pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "ffno", version, about = "Kolmogorov-flow solver and factorized Fourier neural operator toolkit")]
#[command(after_help = "Logs are JSON lines on stderr; set FFNO_LOG to off, error, warn, info or debug.")]
pub struct Cli {
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate train/valid/test trajectory datasets.
    Generate(commands::generate::GenerateArgs),
    /// Train an operator on a train-split dataset.
    Train(commands::train::TrainArgs),
    /// One-step and rollout metrics of a checkpoint against a dataset.
    Eval(commands::eval::EvalArgs),
    /// Runtime versus time-to-decorrelation scan of solvers and operators.
    Bench(commands::bench::BenchArgs),
    /// Kinetic energy spectrum of recorded frames.
    Spectrum(commands::spectrum::SpectrumArgs),
    /// Finite-difference check of every differentiable op and a small model.
    Gradcheck(commands::gradcheck::GradcheckArgs),
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Other(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Generate(a) => commands::generate::run(a),
        Command::Train(a) => commands::train::run(a),
        Command::Eval(a) => commands::eval::run(a),
        Command::Bench(a) => commands::bench::run(a),
        Command::Spectrum(a) => commands::spectrum::run(a),
        Command::Gradcheck(a) => commands::gradcheck::run(a),
    }
}
