//! Command-line front end: scenario simulation, focal-scan fitting,
//! Fisher-information reports, and propagated-field dumps.
//!
//! Exit codes: 0 success, 2 configuration error, 3 input parse error,
//! 4 numerical failure.

mod commands;
mod config;

use clap::{Parser, Subcommand};

#[derive(Debug)]
pub enum CliError {
    /// Invalid configuration or arguments (exit 2).
    Config(String),
    /// Unreadable or malformed input data (exit 3).
    Parse(String),
    /// Numerical failure: non-convergence, degenerate data (exit 4).
    Numerical(String),
    /// I/O failure writing results (exit 1).
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Parse(_) => 3,
            CliError::Numerical(_) => 4,
            CliError::Io(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Parse(m) | CliError::Numerical(m) | CliError::Io(m) => {
                m
            }
        }
    }
}

impl From<gouysim_core::Error> for CliError {
    fn from(e: gouysim_core::Error) -> Self {
        use gouysim_core::Error as E;
        match e {
            E::Parse { .. } => CliError::Parse(e.to_string()),
            E::InvalidBeam(_)
            | E::InvalidMode(_)
            | E::NonRadialMode(_)
            | E::InvalidGrid(_)
            | E::InvalidConfig(_)
            | E::InvalidScan(_) => CliError::Config(e.to_string()),
            E::Io(_) => CliError::Io(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "gouysim",
    about = "Axial Gouy-phase interference of radial modes: simulation, fitting, Fisher information",
    version
)]
struct Cli {
    /// Worker threads for z-sweeps (default: GOUYSIM_THREADS or all cores).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit a simulated curve or density as CSV (stdout or --out).
    Simulate(commands::simulate::SimulateArgs),
    /// Fit the 4-parameter model to a measured or synthetic focal scan.
    Fit(commands::fit::FitArgs),
    /// Quantum and classical Fisher-information report (JSON).
    Qfi(commands::qfi::QfiArgs),
    /// Propagate a sampled radial mode and dump the field (CSV + JSON sidecar).
    Propagate(commands::propagate::PropagateArgs),
}

fn main() {
    let cli = Cli::parse();

    let threads =
        cli.threads.or_else(|| std::env::var("GOUYSIM_THREADS").ok().and_then(|v| v.parse().ok()));
    if let Some(n) = threads {
        // A second initialization (e.g. in tests) is harmless; ignore it.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }

    let result = match cli.command {
        Command::Simulate(args) => commands::simulate::run(args),
        Command::Fit(args) => commands::fit::run(args),
        Command::Qfi(args) => commands::qfi::run(args),
        Command::Propagate(args) => commands::propagate::run(args),
    };

    if let Err(err) = result {
        eprintln!("error: {}", err.message());
        std::process::exit(err.exit_code());
    }
}
