mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use radpath::{Strategy, SyncMode};

/// Learn low-exposure routes through a radiation field and compare them
/// against the exact optimum.
#[derive(Debug, Parser)]
#[command(name = "radpath", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a Q-network and write every run artifact into --out-dir.
    Train(TrainArgs),
    /// Print the minimum-exposure route and its metrics as JSON.
    Oracle(ScenarioArgs),
    /// Print the exposure and reward of every cell as CSV.
    Field(ScenarioArgs),
    /// Print the discrete Fréchet distance between two path documents.
    Compare { a: PathBuf, b: PathBuf },
    /// Recompute the analysis artifacts of a stored run.
    Eval {
        run_dir: PathBuf,
        /// Where to write the recomputed artifacts (defaults to the run directory).
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct ScenarioArgs {
    /// Bundled scenario name, e.g. case_i.
    #[arg(long, conflicts_with = "config")]
    scenario: Option<String>,
    /// Scenario document (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    source: ScenarioArgs,
    /// Seed for every random draw; drawn at random and recorded when absent.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "run")]
    out_dir: PathBuf,
    /// vanilla, restricted or partial.
    #[arg(long)]
    strategy: Option<Strategy>,
    /// fixed or adaptive.
    #[arg(long)]
    sync: Option<SyncMode>,
    #[arg(long)]
    episodes: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(args) => commands::train(args),
        Command::Oracle(args) => commands::oracle(&args),
        Command::Field(args) => commands::field(&args),
        Command::Compare { a, b } => commands::compare(&a, &b),
        Command::Eval { run_dir, out_dir } => commands::eval(&run_dir, out_dir.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
