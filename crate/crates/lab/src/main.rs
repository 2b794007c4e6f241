use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use superint_lab::{exit_code, run, Experiment};

#[derive(Parser)]
#[command(
    name = "superint-lab",
    version,
    about = "Verification lab for superintegrable many-body systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding the environment and the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `sampling.seed`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Bracket residuals, rank and negative controls of an integral set.
    Verify(Common),
    /// Gradient rank of an integral family.
    Rank(Common),
    /// Exact coefficient table of the fifth integral.
    Coeffs(Common),
    /// Shifted Calogero against Wolfes on an angle grid.
    Equivalence(Common),
    /// Symplectic integration with drift of every integral.
    Simulate(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, args) = match cli.command {
        Command::Verify(a) => (Experiment::Verify, a),
        Command::Rank(a) => (Experiment::Rank, a),
        Command::Coeffs(a) => (Experiment::Coeffs, a),
        Command::Equivalence(a) => (Experiment::Equivalence, a),
        Command::Simulate(a) => (Experiment::Simulate, a),
    };
    match run(experiment, &args.config, args.out.as_deref(), args.seed) {
        Ok((outcome, dir)) => {
            if let Some(text) = &outcome.stdout {
                print!("{text}");
            }
            for c in &outcome.report.checks {
                eprintln!("{} {}: {:e}", if c.pass { "ok  " } else { "FAIL" }, c.name, c.value);
            }
            eprintln!("report {} in {}", outcome.report.hash(), dir.display());
            ExitCode::from(exit_code(&outcome.report) as u8)
        }
        Err(e) => {
            eprintln!("superint-lab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
