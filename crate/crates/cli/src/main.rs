//! `diam`: build targets, run the samplers, and post-process traces.

mod benchmark;
mod config;
mod diagnose;
mod error;
mod generate;
mod output;
mod sample;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::error::CliResult;

#[derive(Debug, Parser)]
#[command(name = "diam", version, about = "Adaptive Metropolis samplers for high-dimensional targets")]
struct Cli {
    /// Worker threads for concurrent chains (default: DIAM_THREADS, else all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a test density and write it to a binary file.
    GenerateTarget(generate::GenerateArgs),
    /// Run one or more chains until a stopping rule fires.
    Sample(sample::SampleArgs),
    /// ACF, IACT and PSRF of traces written by `sample`.
    Diagnose(diagnose::DiagnoseArgs),
    /// Time fixed-length runs across dimensions and chain counts.
    Benchmark(benchmark::BenchmarkArgs),
}

fn run(cli: Cli) -> CliResult<()> {
    if cli.threads == Some(0) {
        return Err(error::CliError::Config("--threads must be positive".into()));
    }
    diam::runner::init_thread_pool(cli.threads);
    match cli.command {
        Command::GenerateTarget(a) => generate::run(a),
        Command::Sample(a) => sample::run(a),
        Command::Diagnose(a) => diagnose::run(a),
        Command::Benchmark(a) => benchmark::run(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("diam: {e}");
            e.exit_code()
        }
    }
}
