//! Energy-optimal transmission probabilities for slotted Aloha with
//! capture-oriented power control under a proportional-fairness utility
//! floor.
//!
//! The pipeline is: build a [`Scenario`], classify nodes and set powers with
//! a [`GroupingPlan`], solve for probabilities with [`solve_ucem`], then
//! check the result by slot simulation ([`estimate_throughput`]), battery
//! depletion ([`simulate_lifetime`]) or the distributed message exchange in
//! [`protocol`].

pub mod analytics;
pub mod error;
pub mod experiment;
pub mod grouping;
pub mod model;
pub mod protocol;
pub mod sim;
pub mod solver;

pub use analytics::{
    average_power, convert_utility, effective_rates, per_node_throughput, phi, utility_ceiling,
    utility_prime, utility_report, Ceiling, UtilityReport,
};
pub use error::{Error, Result};
pub use experiment::UtilityFloor;
pub use grouping::{assign_groups, assign_powers, compute_thresholds, GroupingPlan};
pub use model::{generate_disk_scenario, pathgain, Node, RadioParams, Scenario, ScenarioFile};
pub use protocol::{bs_emit, node_apply, AssignMessage, NodeState, SetupMessage};
pub use sim::{
    estimate_throughput, estimate_throughput_models, simulate_lifetime, simulate_lifetime_adaptive,
    slot_outcome, LifetimeReport, ReceptionModel, SimReport,
};
pub use solver::{
    grid_oracle, kkt_residual, solve_ucem, solve_uniform, stationary_prob, Solution, SolverOptions,
    Status, UniformSolution,
};
