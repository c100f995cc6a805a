use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use reflectspde::exec::{resolve_threads, THREADS_ENV};
use reflectspde::{run, RunOptions, Subcommand};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    Estimates,
    Cauchy,
    Inequality,
    Hypotheses,
    Oracle1d,
    Uniqueness,
    All,
}

impl From<Command> for Subcommand {
    fn from(c: Command) -> Self {
        match c {
            Command::Estimates => Subcommand::Estimates,
            Command::Cauchy => Subcommand::Cauchy,
            Command::Inequality => Subcommand::Inequality,
            Command::Hypotheses => Subcommand::Hypotheses,
            Command::Oracle1d => Subcommand::Oracle1d,
            Command::Uniqueness => Subcommand::Uniqueness,
            Command::All => Subcommand::All,
        }
    }
}

/// Penalized-scheme simulator and verification harness for SPDEs reflected
/// in the unit ball.
#[derive(Debug, Parser)]
#[command(name = "reflectspde", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides run.output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides scheme.seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; falls back to REFLECTSPDE_THREADS.
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let env = std::env::var(THREADS_ENV).ok();
    let threads = match resolve_threads(cli.threads, env.as_deref()) {
        Ok(n) => n,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let opts = RunOptions {
        config: cli.config,
        out: cli.out,
        seed: cli.seed,
        threads,
    };
    match run(cli.command.into(), &opts) {
        Ok(outcome) => {
            let files = outcome.manifest.artifacts.len();
            if outcome.failed() {
                eprintln!("numerical failure: diverging paths (artifacts still written)");
                for (study, n, count) in &outcome.failures {
                    eprintln!("  {study}: n = {n}: {count} failed paths");
                }
                return ExitCode::from(3);
            }
            println!("wrote {files} artifacts and manifest.json to {}", outcome.out_dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
