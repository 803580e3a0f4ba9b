use serde::Serialize;
use ucem::analytics::{effective_rates, per_node_throughput, to_rate_utility, utility_ceiling};
use ucem::experiment::{
    energy_sweep, lifetime_sweep, rate_comparison, resolving_policy, Policy, UtilityFloor,
};
use ucem::grouping::GroupingPlan;
use ucem::sim::{
    estimate_throughput_models, simulate_lifetime, simulate_lifetime_adaptive, ReceptionModel,
};
use ucem::solver::{solve_ucem, solve_uniform, SolverOptions, Status};
use ucem::Error;

use crate::args::ModelChoice;
use crate::config::ExperimentConfig;
use crate::output::{ensure_dir, write_csv, write_json};
use crate::CliError;

/// Adds the floor in the caller's units to an infeasibility error.
fn explain(cfg: &ExperimentConfig, e: Error) -> CliError {
    let r = &cfg.scenario.radio;
    let n = cfg.nodes;
    let in_units = |u_prime: f64| match cfg.first_floor() {
        UtilityFloor::Rate(_) => {
            to_rate_utility(u_prime, n, r.packet_bits, r.slot_duration).unwrap_or(u_prime)
        }
        UtilityFloor::Prime(_) => u_prime,
    };
    match e {
        Error::Infeasible { u_prime_max, .. } | Error::UniformInfeasible { u_prime_max, .. } => {
            let policy = if matches!(e, Error::UniformInfeasible { .. }) {
                " (uniform policy)"
            } else {
                ""
            };
            CliError::Infeasible(format!(
                "infeasible{policy}, U_max = {:.6}",
                in_units(u_prime_max)
            ))
        }
        other => other.into(),
    }
}

fn models(choice: ModelChoice, beta: f64) -> Result<Vec<ReceptionModel>, CliError> {
    let sinr = ReceptionModel::sinr(beta)?;
    Ok(match choice {
        ModelChoice::Capture => vec![ReceptionModel::PerfectCapture],
        ModelChoice::Sinr => vec![sinr],
        ModelChoice::Both => vec![ReceptionModel::PerfectCapture, sinr],
    })
}

pub fn run_generate(cfg: &ExperimentConfig) -> Result<(), CliError> {
    ensure_dir(&cfg.out)?;
    let path = cfg.out.join("scenario.json");
    std::fs::write(&path, cfg.scenario.to_file().to_json() + "\n")?;
    write_json(&cfg.out.join("scenario.meta.json"), cfg)?;
    println!("wrote {} ({} nodes)", path.display(), cfg.nodes);
    Ok(())
}

#[derive(Debug, Serialize)]
struct NodeRow {
    id: usize,
    d: f64,
    group: usize,
    #[serde(rename = "P_ij")]
    p_ij: f64,
    q: f64,
    #[serde(rename = "S_analytic")]
    s_analytic: f64,
    x_bits_per_s: f64,
}

#[derive(Debug, Serialize)]
struct SolveReport<'a> {
    policy: Policy,
    lambda: Option<f64>,
    status: &'static str,
    #[serde(rename = "U_c")]
    u_c: f64,
    #[serde(rename = "U_prime_c")]
    u_prime_c: f64,
    #[serde(rename = "U_prime")]
    u_prime: f64,
    #[serde(rename = "U_prime_max")]
    u_prime_max: f64,
    avg_power_watts: f64,
    kkt_residual: Option<f64>,
    q: &'a [f64],
}

/// Minimum-energy (or uniform) probabilities at the first floor; writes
/// `solution.json`, `plan.json` and `nodes.csv`.
pub fn run_solve(cfg: &ExperimentConfig) -> Result<SolveSummary, CliError> {
    let s = &cfg.scenario;
    let plan = GroupingPlan::build(s)?;
    let opts = SolverOptions::default();
    let uc = cfg.u_prime_floors[0];
    let n = cfg.nodes;

    let (q, report_fields) = if cfg.uniform {
        let u = solve_uniform(&plan, uc, &opts).map_err(|e| explain(cfg, e))?;
        (
            u.probs(n),
            (None, "optimal", u.u_prime, u.avg_power_watts, None),
        )
    } else {
        let sol = solve_ucem(&plan, uc, &opts).map_err(|e| explain(cfg, e))?;
        let status = match sol.status {
            Status::Optimal => "optimal",
            Status::AtCeiling => "at_ceiling",
        };
        (
            sol.q.clone(),
            (
                Some(sol.lambda),
                status,
                sol.u_prime,
                sol.avg_power_watts,
                Some(sol.kkt_residual),
            ),
        )
    };
    let (lambda, status, u_prime, avg_power_watts, kkt_residual) = report_fields;
    let report = SolveReport {
        policy: if cfg.uniform {
            Policy::Uniform
        } else {
            Policy::Optimal
        },
        lambda,
        status,
        u_c: cfg.first_floor().value(),
        u_prime_c: uc,
        u_prime,
        u_prime_max: utility_ceiling(&plan).u_prime_max,
        avg_power_watts,
        kkt_residual,
        q: &q,
    };

    let r = &s.radio;
    let s_an = per_node_throughput(&q, &plan)?;
    let x = effective_rates(&s_an, r.packet_bits, r.slot_duration)?;
    let rows: Vec<NodeRow> = (0..n)
        .map(|j| NodeRow {
            id: s.nodes[j].id,
            d: s.nodes[j].distance,
            group: plan.group_of[j] + 1,
            p_ij: plan.tx_power[j],
            q: q[j],
            s_analytic: s_an[j],
            x_bits_per_s: x[j],
        })
        .collect();

    ensure_dir(&cfg.out)?;
    write_json(&cfg.out.join("solution.json"), &report)?;
    let ids: Vec<usize> = s.nodes.iter().map(|n| n.id).collect();
    write_json(&cfg.out.join("plan.json"), &plan.to_file(&ids))?;
    write_csv(&cfg.out.join("nodes.csv"), &rows, cfg)?;
    println!(
        "{} policy: {status}, average power {avg_power_watts:.6} W, U' = {u_prime:.6} (floor {uc:.6})",
        if cfg.uniform { "uniform" } else { "optimal" }
    );
    Ok(SolveSummary { q, avg_power_watts })
}

#[derive(Debug, Clone)]
pub struct SolveSummary {
    pub q: Vec<f64>,
    pub avg_power_watts: f64,
}

pub fn run_sweep_energy(cfg: &ExperimentConfig) -> Result<(), CliError> {
    if cfg.floors.len() < 2 {
        return Err(CliError::usage(
            "sweep-energy needs at least two U_c values",
        ));
    }
    let plan = GroupingPlan::build(&cfg.scenario)?;
    let rows = energy_sweep(&cfg.scenario, &plan, &cfg.floors, &SolverOptions::default())?;
    ensure_dir(&cfg.out)?;
    let path = cfg.out.join("energy.csv");
    write_csv(&path, &rows, cfg)?;
    println!("wrote {} ({} points)", path.display(), rows.len());
    Ok(())
}

pub fn run_sweep_lifetime(cfg: &ExperimentConfig) -> Result<(), CliError> {
    if cfg.floors.len() < 2 {
        return Err(CliError::usage(
            "sweep-lifetime needs at least two U_c values",
        ));
    }
    let plan = GroupingPlan::build(&cfg.scenario)?;
    let rows = lifetime_sweep(
        &cfg.scenario,
        &plan,
        &cfg.floors,
        cfg.death_fraction,
        cfg.sim_seed,
        cfg.reoptimize,
        &SolverOptions::default(),
    )?;
    ensure_dir(&cfg.out)?;
    let path = cfg.out.join("lifetime.csv");
    write_csv(&path, &rows, cfg)?;
    println!("wrote {} ({} points)", path.display(), rows.len());
    Ok(())
}

pub fn run_rates(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let plan = GroupingPlan::build(&cfg.scenario)?;
    let rows = rate_comparison(
        &cfg.scenario,
        &plan,
        cfg.first_floor(),
        cfg.slots,
        cfg.sim_seed,
        &SolverOptions::default(),
    )
    .map_err(|e| explain(cfg, e))?;
    ensure_dir(&cfg.out)?;
    let path = cfg.out.join("rates.csv");
    write_csv(&path, &rows, cfg)?;
    println!("wrote {} ({} nodes)", path.display(), rows.len());
    Ok(())
}

/// Slot simulation under the selected models plus a lifetime run.
pub fn run_simulate(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let s = &cfg.scenario;
    let plan = GroupingPlan::build(s)?;
    let opts = SolverOptions::default();
    let uc = cfg.u_prime_floors[0];
    let policy = if cfg.uniform {
        Policy::Uniform
    } else {
        Policy::Optimal
    };
    let q = match policy {
        Policy::Optimal => solve_ucem(&plan, uc, &opts).map_err(|e| explain(cfg, e))?.q,
        Policy::Uniform => solve_uniform(&plan, uc, &opts)
            .map_err(|e| explain(cfg, e))?
            .probs(cfg.nodes),
    };
    let models = models(cfg.models, s.radio.beta)?;
    let reports = estimate_throughput_models(s, &plan, &q, &models, cfg.slots, cfg.sim_seed)?;
    ensure_dir(&cfg.out)?;
    for rep in &reports {
        let name = format!("throughput_{}", rep.model.name());
        write_csv(&cfg.out.join(format!("{name}.csv")), &rep.rows(), cfg)?;
        write_json(&cfg.out.join(format!("{name}.json")), rep)?;
    }
    let life = if cfg.reoptimize {
        let resolve = resolving_policy(&plan, policy, uc, &opts);
        simulate_lifetime_adaptive(s, &plan, &q, cfg.death_fraction, cfg.sim_seed, resolve)?
    } else {
        simulate_lifetime(s, &plan, &q, cfg.death_fraction, cfg.sim_seed)?
    };
    write_csv(&cfg.out.join("lifetime_nodes.csv"), &life.rows(), cfg)?;
    write_json(&cfg.out.join("lifetime.json"), &life)?;
    match life.network_lifetime_seconds {
        Some(t) => println!(
            "network lifetime {t:.1} s ({} slots)",
            life.network_lifetime_slots.unwrap_or(0)
        ),
        None => println!("death fraction never reached"),
    }
    Ok(())
}
