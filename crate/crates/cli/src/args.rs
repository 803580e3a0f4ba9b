use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "ucem",
    version,
    about = "Energy-optimal transmission probabilities for capture-aware slotted Aloha"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Place nodes in a disk and write the scenario file.
    Generate(CommonArgs),
    /// Solve for the minimum-energy probabilities at one utility floor.
    Solve(CommonArgs),
    /// Optimal and uniform-policy power over a range of utility floors.
    SweepEnergy(CommonArgs),
    /// Network lifetime under both policies over a range of utility floors.
    SweepLifetime(CommonArgs),
    /// Per-node effective rates: analytic, simulated (both models), uniform.
    Rates(CommonArgs),
    /// Slot-level simulation and battery lifetime for one utility floor.
    Simulate(CommonArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelChoice {
    Capture,
    Sinr,
    Both,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CommonArgs {
    /// Scenario JSON file; overrides the generator flags.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    pub n: usize,
    /// Disk radius, meters.
    #[arg(long, default_value_t = 20.0)]
    pub radius: f64,
    /// Minimum node distance, meters.
    #[arg(long = "d-min", default_value_t = 1.0)]
    pub d_min: f64,
    /// Placement seed; also the default simulation seed.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Simulation seed when it should differ from the placement seed.
    #[arg(long = "sim-seed")]
    pub sim_seed: Option<u64>,

    /// Base transmit power, watts.
    #[arg(long = "power", default_value_t = 0.2)]
    pub power_w: f64,
    /// SINR threshold, dB.
    #[arg(long = "beta-db", default_value_t = 6.0)]
    pub beta_db: f64,
    /// Slot duration, seconds.
    #[arg(long = "slot", default_value_t = 0.005)]
    pub slot_s: f64,
    /// Packet length, bits.
    #[arg(long = "bits", default_value_t = 1000)]
    pub bits: u64,
    /// Battery energy, joules.
    #[arg(long = "battery", default_value_t = 1000.0)]
    pub battery_j: f64,

    /// Utility floor(s) on effective rates (repeatable).
    #[arg(long = "uc", allow_hyphen_values = true)]
    pub uc: Vec<f64>,
    /// Utility floors as `lo:hi:steps`.
    #[arg(long = "uc-range", allow_hyphen_values = true)]
    pub uc_range: Option<String>,
    /// Read floors as sums of log success probabilities instead.
    #[arg(long = "u-prime")]
    pub u_prime: bool,

    #[arg(long, value_enum, default_value_t = ModelChoice::Both)]
    pub model: ModelChoice,
    #[arg(long, default_value_t = 200_000)]
    pub slots: u64,
    /// Use the common-probability baseline instead of the optimal policy.
    #[arg(long)]
    pub uniform: bool,
    /// Fraction of dead nodes that ends the network lifetime.
    #[arg(long = "death-fraction", default_value_t = 0.7)]
    pub death_fraction: f64,
    /// Re-solve on the survivors after every node death.
    #[arg(long)]
    pub reoptimize: bool,

    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}
