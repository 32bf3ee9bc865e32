use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use surrogate_mcmc::commands::{cmd_bench, cmd_run};
use surrogate_mcmc::config::{RunConfig, Settings, SEED_ENV};
use surrogate_mcmc::error::Result;
use surrogate_mcmc::report::cmd_report;

#[derive(Parser)]
#[command(name = "surrogate-mcmc", version, about = "Two-stage GP-surrogate MCMC experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one chain per algorithm and write its trace and metrics.
    Run(Settings),
    /// Run seeded replicates and write a summary table.
    Bench(Settings),
    /// Merge metrics files into one table.
    Report {
        /// Metrics or summary JSON files, or directories of them.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Write the merged table as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

fn resolve(settings: &Settings) -> Result<RunConfig> {
    let env = std::env::var(SEED_ENV).ok();
    RunConfig::resolve(settings, env.as_deref())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(s) => resolve(s).and_then(|c| cmd_run(&c)).map(drop),
        Command::Bench(s) => resolve(s)
            .and_then(|c| cmd_bench(&c))
            .map(|p| println!("summary: {}", p.display())),
        Command::Report { inputs, json } => cmd_report(inputs, json.as_deref()).map(drop),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
