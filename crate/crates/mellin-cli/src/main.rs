//! `mellin-lab`: problem ingestion, verification suites and report emission.
//!
//! Exit codes: 0 pass, 1 check failure, 2 input error, 3 inconclusive numerics.

mod commands;
mod output;
mod problem;
mod suites;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(
    name = "mellin-lab",
    version,
    about = "Numerical laboratory for Mellin and edge pseudo-differential calculus"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Directory for JSON, text and CSV reports (created if missing).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for randomized test functions; recorded in every report.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Multiplies grid and matrix sizes.
    #[arg(long, global = true, default_value_t = 1.0)]
    grid_scale: f64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Admissible weights and the non-bijectivity set of a Fuchs-type operator.
    Weights {
        #[arg(long)]
        problem: PathBuf,
    },
    /// Winding number of `det(1 + f)` against the Toeplitz index oracle.
    Index {
        #[arg(long)]
        problem: PathBuf,
    },
    /// Runs a named verification suite and prints one JSON line per check.
    Verify {
        #[arg(long)]
        suite: String,
    },
}

/// Settings shared by every command.
#[derive(Clone, Debug)]
pub struct Context {
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub grid_scale: f64,
}

impl Context {
    /// `n` scaled by `--grid-scale`, never below `min`.
    pub fn scaled(&self, n: usize, min: usize) -> usize {
        ((n as f64 * self.grid_scale).round() as usize).max(min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug)]
pub enum Failure {
    Input(anyhow::Error),
    Inconclusive(anyhow::Error),
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Input(e.into())
    }
}

fn run(cli: Cli) -> Result<Verdict, Failure> {
    if !(cli.grid_scale.is_finite() && cli.grid_scale > 0.0) {
        return Err(Failure::Input(anyhow::anyhow!(
            "--grid-scale must be positive, got {}",
            cli.grid_scale
        )));
    }
    let ctx = Context {
        out: cli.out,
        seed: cli.seed,
        grid_scale: cli.grid_scale,
    };
    if let Some(dir) = &ctx.out {
        std::fs::create_dir_all(dir)?;
    }
    match cli.command {
        Command::Weights { problem } => commands::weights(&ctx, &problem::load(&problem)?),
        Command::Index { problem } => commands::index(&ctx, &problem::load(&problem)?),
        Command::Verify { suite } => suites::verify(&ctx, &suite),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(Verdict::Pass) => ExitCode::SUCCESS,
        Ok(Verdict::Fail) => ExitCode::from(1),
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Inconclusive(e)) => {
            eprintln!("inconclusive: {e:#}");
            ExitCode::from(3)
        }
    }
}
