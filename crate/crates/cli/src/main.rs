//! `signcorr`: correlation estimates from CSV files, Monte Carlo
//! comparisons and closed-form asymptotic quantities.
//!
//! Exit codes: 0 success, 1 some estimators failed, 2 invalid configuration
//! or parameters, 3 unreadable input or output, 4 every estimator failed.

mod error;
mod estimate;
mod input;
mod simulate;
mod theory;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "signcorr",
    version,
    about = "Spatial sign correlation and robust competitors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate correlations from a CSV file.
    Estimate(estimate::EstimateArgs),
    /// Run a Monte Carlo scenario.
    Simulate(simulate::SimulateArgs),
    /// Evaluate asymptotic quantities of the spatial sign correlation.
    Theory(theory::TheoryArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() {
                error::EXIT_CONFIG
            } else {
                error::EXIT_OK
            });
        }
    };
    let res = match &cli.command {
        Command::Estimate(a) => estimate::run(a),
        Command::Simulate(a) => simulate::run(a),
        Command::Theory(a) => theory::run(a),
    };
    match res {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
