//! `evosys` command-line harness.
//!
//! Exit codes: 0 all certifications pass, 2 certification failure, 3 config
//! error, 1 output could not be written.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::Config;
use report::{CliError, OutDir};

#[derive(Parser)]
#[command(name = "evosys", version, about = "Degenerate eddy-current experiments on a staggered grid")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Overrides the config seed and the seeds of random source patterns.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for the ε sweep; overrides the config value.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Certify hypotheses and constants; writes check.json.
    Check,
    /// Solve the eddy-current problem; writes eddy.csv and eddy.json.
    SolveEddy,
    /// Solve the saddle-point form; writes saddle.csv and saddle.json.
    Saddle,
    /// ε → 0 study of the full Maxwell system; writes limit.csv and limit.json.
    LimitStudy,
    /// Bidomain preset; writes bidomain.csv and bidomain.json.
    Bidomain,
    /// Subspace dimensions and overlaps; writes decompose.json and overlaps.csv.
    Decompose,
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    let path = cli.config.as_ref().ok_or_else(|| CliError::Config("--config PATH is required".into()))?;
    let mut cfg = Config::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.override_seed(seed);
    }
    let threads = match cli.threads {
        Some(0) => return Err(CliError::Config("--threads must be at least 1".into())),
        Some(t) => t,
        None => cfg.threads,
    };
    let out = OutDir::create(&cli.out)?;
    match cli.command {
        Command::Check => commands::check(&cfg, &out),
        Command::SolveEddy => commands::solve_eddy(&cfg, &out),
        Command::Saddle => commands::saddle(&cfg, &out),
        Command::LimitStudy => commands::limit(&cfg, &out, threads),
        Command::Bidomain => commands::bidomain(&cfg, &out),
        Command::Decompose => commands::decompose(&cfg, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("certification failure: see the report in {}", cli.out.display());
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
