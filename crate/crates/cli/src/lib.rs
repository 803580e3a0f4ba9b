//! Experiment harness: scenario files, single solves, sweeps and
//! simulations written as CSV/JSON for plotting.

pub mod args;
pub mod commands;
pub mod config;
pub mod output;

use std::fmt;

use args::{Cli, Command};
use config::ExperimentConfig;

/// Failure with the process exit code it maps to.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unreadable input, I/O.
    Usage(String),
    /// The utility floor cannot be met.
    Infeasible(String),
    /// Solver or simulation failed numerically.
    Numerical(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Infeasible(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Infeasible(m) | CliError::Numerical(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ucem::Error> for CliError {
    fn from(e: ucem::Error) -> Self {
        use ucem::Error as E;
        match e {
            E::Infeasible { .. } | E::UniformInfeasible { .. } | E::NoFeasiblePoint => {
                CliError::Infeasible(e.to_string())
            }
            E::NonConvergence { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let (name, args, sweep) = match &cli.command {
        Command::Generate(a) => ("generate", a, false),
        Command::Solve(a) => ("solve", a, false),
        Command::SweepEnergy(a) => ("sweep-energy", a, true),
        Command::SweepLifetime(a) => ("sweep-lifetime", a, true),
        Command::Rates(a) => ("rates", a, false),
        Command::Simulate(a) => ("simulate", a, false),
    };
    let cfg = ExperimentConfig::resolve(name, args, sweep)?;
    match cli.command {
        Command::Generate(_) => commands::run_generate(&cfg),
        Command::Solve(_) => commands::run_solve(&cfg).map(|_| ()),
        Command::SweepEnergy(_) => commands::run_sweep_energy(&cfg),
        Command::SweepLifetime(_) => commands::run_sweep_lifetime(&cfg),
        Command::Rates(_) => commands::run_rates(&cfg),
        Command::Simulate(_) => commands::run_simulate(&cfg),
    }
}
