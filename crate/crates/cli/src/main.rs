//! `orbitron`: simulate, find equilibria, certify stability and scan
//! parameters of a magnetized top from a JSON config.
//!
//! Exit codes: 0 success (including "no equilibrium found"), 2 configuration
//! error, 3 numerical failure, 1 I/O failure.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::{RunConfig, TaskKind};

#[derive(Debug, Parser)]
#[command(name = "orbitron", version, about = "Relative equilibria and stability of a magnetized symmetric top")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Io {
    /// JSON run configuration.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output file; sidecar files are written next to it.
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate a trajectory: CSV at --out, summary at <out>.summary.json.
    Simulate {
        #[command(flatten)]
        io: Io,
        /// Report the laboratory energy (with the Casimir term) in the `h` column.
        #[arg(long)]
        include_casimir_energy: bool,
    },
    /// List relative equilibria with their first-order residuals.
    Equilibrium {
        #[command(flatten)]
        io: Io,
    },
    /// Certify one equilibrium.
    Certify {
        #[command(flatten)]
        io: Io,
        /// Add the eigenvalue cross-check.
        #[arg(long)]
        oracle: bool,
    },
    /// Window, levitation or two-parameter stability scan as CSV.
    Scan {
        #[command(flatten)]
        io: Io,
        /// Bisect the window edges into <out>.endpoints.json.
        #[arg(long)]
        refine: bool,
    },
}

/// Failure classes, mapped to exit codes.
pub enum Failure {
    Config(anyhow::Error),
    Numerical(anyhow::Error),
    Io(anyhow::Error),
}

impl Failure {
    fn report(&self) -> ExitCode {
        let (code, kind, e) = match self {
            Failure::Config(e) => (2, "configuration error", e),
            Failure::Numerical(e) => (3, "numerical failure", e),
            Failure::Io(e) => (1, "I/O error", e),
        };
        eprintln!("orbitron: {kind}: {e:#}");
        ExitCode::from(code)
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let (io, kind) = match &cli.command {
        Command::Simulate { io, .. } => (io, TaskKind::Simulate),
        Command::Equilibrium { io } => (io, TaskKind::Equilibrium),
        Command::Certify { io, .. } => (io, TaskKind::Certify),
        Command::Scan { io, .. } => (io, TaskKind::Scan),
    };
    let cfg = RunConfig::load(&io.config).map_err(Failure::Config)?;
    cfg.require(kind).map_err(Failure::Config)?;
    match cli.command {
        Command::Simulate { include_casimir_energy, .. } => commands::simulate(&cfg, &io.out, include_casimir_energy),
        Command::Equilibrium { .. } => commands::equilibrium(&cfg, &io.out),
        Command::Certify { oracle, .. } => commands::certify(&cfg, &io.out, oracle),
        Command::Scan { refine, .. } => commands::scan(&cfg, &io.out, refine),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => f.report(),
    }
}
