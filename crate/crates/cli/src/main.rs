mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::Params;

#[derive(Parser)]
#[command(
    name = "gtconverse",
    version,
    about = "Converse bounds and Monte Carlo checks for noisy group testing"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Strong and weak converse thresholds on the number of tests.
    Threshold(Run),
    /// Chebyshev lower bound on the error probability of a given matrix.
    Bound(Run),
    /// Monte Carlo error rate of a decoder.
    Simulate(Run),
    /// Error rate over a grid of test counts, with threshold lines.
    Sweep(Run),
    /// Check the approximation bounds on a grid and on random instances.
    Verify(Run),
    /// Draw a test matrix from an ensemble and write it in text form.
    Matrix(Run),
}

#[derive(Args)]
struct Run {
    #[command(flatten)]
    params: Params,
    /// JSON parameters, or a previous output whose embedded config is reused.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; stdout when unset.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or parameters; exit status 2.
    Usage(String),
    /// Error raised by the library; exit status 1.
    Module(gtconverse::Error),
    /// Ran to completion but a check failed; exit status 1.
    Failed(String),
}

impl From<gtconverse::Error> for CliError {
    fn from(e: gtconverse::Error) -> Self {
        CliError::Module(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, run) = match cli.command {
        Command::Threshold(r) => ("threshold", r),
        Command::Bound(r) => ("bound", r),
        Command::Simulate(r) => ("simulate", r),
        Command::Sweep(r) => ("sweep", r),
        Command::Verify(r) => ("verify", r),
        Command::Matrix(r) => ("matrix", r),
    };
    match run::dispatch(
        name,
        &run.params,
        run.config.as_deref(),
        run.output.as_deref(),
    ) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Module(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(CliError::Failed(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(1)
        }
    }
}
