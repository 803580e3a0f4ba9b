//! Sweeps and per-node comparisons behind the command-line harness.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::utility_ceiling;
use crate::analytics::{convert_utility, effective_rates, per_node_throughput};
use crate::error::Result;
use crate::grouping::GroupingPlan;
use crate::model::{generate_disk_scenario, RadioParams, Scenario, DEFAULT_D_MIN};
use crate::sim::{
    estimate_throughput_models, simulate_lifetime, simulate_lifetime_adaptive, ReceptionModel,
};
use crate::solver::{solve_ucem, solve_uniform, SolverOptions};

pub const TABLE_NODES: usize = 50;
pub const TABLE_RADIUS: f64 = 20.0;
pub const TABLE_UTILITY: f64 = 219.0;
pub const DEFAULT_DEATH_FRACTION: f64 = 0.7;

/// Fifty nodes in a 20 m disk with the default radio parameters.
pub fn table_scenario(seed: u64) -> Result<Scenario> {
    generate_disk_scenario(
        TABLE_NODES,
        TABLE_RADIUS,
        DEFAULT_D_MIN,
        RadioParams::default(),
        seed,
    )
}

/// A utility floor, either on effective rates (`U`) or on success
/// probabilities (`U'`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UtilityFloor {
    Rate(f64),
    Prime(f64),
}

impl UtilityFloor {
    pub fn value(&self) -> f64 {
        match *self {
            UtilityFloor::Rate(v) | UtilityFloor::Prime(v) => v,
        }
    }

    pub fn to_prime(&self, n: usize, radio: &RadioParams) -> Result<f64> {
        match *self {
            UtilityFloor::Rate(u) => convert_utility(u, n, radio.packet_bits, radio.slot_duration),
            UtilityFloor::Prime(u) => Ok(u),
        }
    }
}

/// `lo, lo + h, …, hi` with `steps` points.
pub fn linspace(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => vec![],
        1 => vec![lo],
        _ => (0..steps)
            .map(|k| lo + (hi - lo) * k as f64 / (steps - 1) as f64)
            .collect(),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyPoint {
    #[serde(rename = "U_c")]
    pub u_c: f64,
    #[serde(rename = "U_prime_c")]
    pub u_prime_c: f64,
    pub optimal_power: Option<f64>,
    pub uniform_power: Option<f64>,
    pub reduction_pct: Option<f64>,
}

/// Minimum and uniform-policy average power for each floor. Infeasible
/// points leave their cells empty.
pub fn energy_sweep(
    scenario: &Scenario,
    plan: &GroupingPlan,
    floors: &[UtilityFloor],
    opts: &SolverOptions,
) -> Result<Vec<EnergyPoint>> {
    floors
        .par_iter()
        .map(|f| {
            let uc = f.to_prime(scenario.len(), &scenario.radio)?;
            let optimal_power = solve_ucem(plan, uc, opts).ok().map(|s| s.avg_power_watts);
            let uniform_power = solve_uniform(plan, uc, opts)
                .ok()
                .map(|s| s.avg_power_watts);
            let reduction_pct = match (optimal_power, uniform_power) {
                (Some(o), Some(u)) => Some(100.0 * (u - o) / u),
                _ => None,
            };
            Ok(EnergyPoint {
                u_c: f.value(),
                u_prime_c: uc,
                optimal_power,
                uniform_power,
                reduction_pct,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    Optimal,
    Uniform,
}

fn policy_probs(
    plan: &GroupingPlan,
    policy: Policy,
    u_prime_c: f64,
    opts: &SolverOptions,
) -> Result<Vec<f64>> {
    match policy {
        Policy::Optimal => Ok(solve_ucem(plan, u_prime_c, opts)?.q),
        Policy::Uniform => Ok(solve_uniform(plan, u_prime_c, opts)?.probs(plan.num_nodes())),
    }
}

/// Re-solves on the survivors each time a node dies, keeping the average
/// per-node utility floor (`U'_c · alive / N`). When the survivors cannot
/// reach it they fall back to the utility-maximizing probabilities.
pub fn resolving_policy<'a>(
    plan: &'a GroupingPlan,
    policy: Policy,
    u_prime_c: f64,
    opts: &'a SolverOptions,
) -> impl FnMut(&[bool]) -> Result<Vec<f64>> + 'a {
    move |alive: &[bool]| {
        let (sub, idx) = plan.restrict(alive)?;
        let floor = u_prime_c * idx.len() as f64 / plan.num_nodes() as f64;
        let q_sub = match policy_probs(&sub, policy, floor, opts) {
            Ok(q) => q,
            Err(crate::Error::Infeasible { .. }) | Err(crate::Error::UniformInfeasible { .. }) => {
                utility_ceiling(&sub).q_star
            }
            Err(e) => return Err(e),
        };
        let mut q = vec![0.0; plan.num_nodes()];
        for (k, &j) in idx.iter().enumerate() {
            q[j] = q_sub[k];
        }
        Ok(q)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LifetimePoint {
    #[serde(rename = "U_c")]
    pub u_c: f64,
    pub lifetime_optimal: Option<u64>,
    pub lifetime_uniform: Option<u64>,
    pub lifetime_optimal_seconds: Option<f64>,
    pub lifetime_uniform_seconds: Option<f64>,
    pub analytic_optimal: Option<f64>,
    pub analytic_uniform: Option<f64>,
}

/// Network lifetime (slots) under optimal and uniform policies for each
/// floor. Every point reuses `seed`, so lifetimes across floors are driven
/// by the same random draws. With `reoptimize`, survivors re-solve after
/// every death (see [`resolving_policy`]).
pub fn lifetime_sweep(
    scenario: &Scenario,
    plan: &GroupingPlan,
    floors: &[UtilityFloor],
    death_fraction: f64,
    seed: u64,
    reoptimize: bool,
    opts: &SolverOptions,
) -> Result<Vec<LifetimePoint>> {
    let n = scenario.len();
    let run = |policy: Policy, uc: f64| -> Result<Option<crate::sim::LifetimeReport>> {
        let q = match policy_probs(plan, policy, uc, opts) {
            Ok(q) => q,
            Err(_) => return Ok(None),
        };
        let report = if reoptimize {
            let resolve = resolving_policy(plan, policy, uc, opts);
            simulate_lifetime_adaptive(scenario, plan, &q, death_fraction, seed, resolve)?
        } else {
            simulate_lifetime(scenario, plan, &q, death_fraction, seed)?
        };
        Ok(Some(report))
    };
    floors
        .iter()
        .map(|f| {
            let uc = f.to_prime(n, &scenario.radio)?;
            let optimal = run(Policy::Optimal, uc)?;
            let uniform = run(Policy::Uniform, uc)?;
            Ok(LifetimePoint {
                u_c: f.value(),
                lifetime_optimal: optimal.as_ref().and_then(|r| r.network_lifetime_slots),
                lifetime_uniform: uniform.as_ref().and_then(|r| r.network_lifetime_slots),
                lifetime_optimal_seconds: optimal.as_ref().and_then(|r| r.network_lifetime_seconds),
                lifetime_uniform_seconds: uniform.as_ref().and_then(|r| r.network_lifetime_seconds),
                analytic_optimal: optimal.as_ref().map(|r| r.analytic_network_lifetime_slots),
                analytic_uniform: uniform.as_ref().map(|r| r.analytic_network_lifetime_slots),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct RatePoint {
    pub node_id: usize,
    pub distance_m: f64,
    /// One-based.
    pub group: usize,
    pub q_optimal: f64,
    pub x_analytic_capture: f64,
    pub x_mc_capture: f64,
    pub x_mc_capture_se: f64,
    pub x_mc_sinr: f64,
    pub x_uniform: f64,
}

/// Per-node effective rates (bit/s) at one utility floor: analytic and
/// simulated under the optimal policy, and analytic under the uniform
/// policy. Rows are sorted by distance to the base station.
pub fn rate_comparison(
    scenario: &Scenario,
    plan: &GroupingPlan,
    floor: UtilityFloor,
    slots: u64,
    seed: u64,
    opts: &SolverOptions,
) -> Result<Vec<RatePoint>> {
    let r = &scenario.radio;
    let n = scenario.len();
    let uc = floor.to_prime(n, r)?;
    let sol = solve_ucem(plan, uc, opts)?;
    let uni = solve_uniform(plan, uc, opts)?;
    let to_rates = |s: &[f64]| effective_rates(s, r.packet_bits, r.slot_duration);

    let x_opt = to_rates(&per_node_throughput(&sol.q, plan)?)?;
    let x_uni = to_rates(&per_node_throughput(&uni.probs(n), plan)?)?;
    let models = [
        ReceptionModel::PerfectCapture,
        ReceptionModel::sinr(r.beta)?,
    ];
    let reps = estimate_throughput_models(scenario, plan, &sol.q, &models, slots, seed)?;
    let x_cap = to_rates(&reps[0].empirical_s)?;
    let x_cap_se = to_rates(&reps[0].std_err)?;
    let x_sinr = to_rates(&reps[1].empirical_s)?;

    let mut rows: Vec<RatePoint> = (0..n)
        .map(|j| RatePoint {
            node_id: scenario.nodes[j].id,
            distance_m: scenario.nodes[j].distance,
            group: plan.group_of[j] + 1,
            q_optimal: sol.q[j],
            x_analytic_capture: x_opt[j],
            x_mc_capture: x_cap[j],
            x_mc_capture_se: x_cap_se[j],
            x_mc_sinr: x_sinr[j],
            x_uniform: x_uni[j],
        })
        .collect();
    rows.sort_by(|a, b| {
        a.distance_m
            .total_cmp(&b.distance_m)
            .then(a.node_id.cmp(&b.node_id))
    });
    Ok(rows)
}

/// Largest over smallest of the positive entries.
pub fn spread(values: impl IntoIterator<Item = f64>) -> f64 {
    let (lo, hi) = values
        .into_iter()
        .filter(|v| *v > 0.0)
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
    hi / lo
}
