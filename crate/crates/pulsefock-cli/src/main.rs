use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pulsefock_cli::{execute, Scenario};

/// Pulse-level simulator for beam-splitter interference experiments.
#[derive(Parser)]
#[command(name = "pulsefock", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One photon through the splitter: detection probabilities, split-mode
    /// commutators, and pulse snapshots.
    #[command(name = "single-bs")]
    SingleBs(RunArgs),
    /// Two-photon interference swept over arrival delays; one CSV row per
    /// delay.
    #[command(name = "hom-sweep")]
    HomSweep(RunArgs),
    /// Numerical verification suites: reciprocal-map unitarity, eigenbasis
    /// evolution equivalence, energy conservation.
    Verify(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario configuration file
    config: PathBuf,
    /// Write outputs here instead of the configured directory
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (scenario, args) = match &cli.command {
        Command::SingleBs(args) => (Scenario::SingleBs, args),
        Command::HomSweep(args) => (Scenario::HomSweep, args),
        Command::Verify(args) => (Scenario::Verify, args),
    };
    match execute(scenario, &args.config, args.output_dir.as_deref()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("{error}");
            ExitCode::from(error.exit_code() as u8)
        }
    }
}
