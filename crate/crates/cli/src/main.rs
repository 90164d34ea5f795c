//! `stagewise` command-line tool: fit, predict, simulate, benchmark and
//! emit plot data.

mod artifact;
mod error;
mod fit;
mod predict;
mod sim;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "stagewise", version, about = "Stagewise boosting for distributional regression")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "STAGEWISE_THREADS")]
    threads: Option<usize>,
    /// Suppress progress output on stderr.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a model to a CSV file.
    Fit(fit::FitArgs),
    /// Predict distribution parameters for new data.
    Predict(predict::PredictArgs),
    /// Run one simulation scenario.
    Simulate(sim::SimulateArgs),
    /// Run a grid of simulation scenarios.
    Bench(sim::BenchArgs),
    /// Emit plot-ready CSV from a summary or a fit.
    PlotData(sim::PlotArgs),
}

fn run(cli: &Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::input(format!("thread pool: {e}")))?;
    }
    match &cli.command {
        Command::Fit(a) => fit::cmd_fit(a, cli.quiet),
        Command::Predict(a) => predict::cmd_predict(a),
        Command::Simulate(a) => sim::cmd_simulate(a, cli.quiet),
        Command::Bench(a) => sim::cmd_bench(a, cli.quiet),
        Command::PlotData(a) => sim::cmd_plot(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(error::EXIT_INPUT) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
