//! `dla`: command line front end for the DLA workbench.

mod beurling;
mod bounds;
mod config;
mod error;
mod fit;
mod output;
mod potential;
mod simulate;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use error::CliError;

#[derive(Parser)]
#[command(name = "dla", version, about = "Diffusion limited aggregation on transient graphs")]
struct Cli {
    /// Worker threads for parallel estimators. Results do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Grow an aggregate and stream one JSON record per particle.
    Simulate(simulate::Args),
    /// Fit the growth exponent and envelope ratio of a run file.
    Fit(fit::Args),
    /// Check Beurling estimates on all small connected sets.
    Beurling(beurling::Args),
    /// Exact and Monte Carlo potential theory.
    Potential(potential::Args),
    /// Evaluate growth bounds and envelopes.
    Bounds(bounds::Args),
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(w) = cli.workers {
        if w == 0 {
            return Err(CliError::Config("--workers must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Simulate(a) => simulate::run(a),
        Command::Fit(a) => fit::run(a),
        Command::Beurling(a) => beurling::run(a),
        Command::Potential(a) => potential::run(a),
        Command::Bounds(a) => bounds::run(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.code() as u8)
        }
    }
}
