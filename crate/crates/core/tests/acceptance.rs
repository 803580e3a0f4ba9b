//! Acceptance gate: one line per criterion, nonzero exit on any hard failure.
//!
//! Run with `cargo test -p ucem-core --test acceptance -- --nocapture` (the
//! output is printed either way since this target has no libtest harness).

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ucem::experiment::{
    energy_sweep, lifetime_sweep, linspace, table_scenario, UtilityFloor, DEFAULT_DEATH_FRACTION,
    TABLE_UTILITY,
};
use ucem::sim::estimate_throughput_models;
use ucem::*;

#[derive(PartialEq)]
enum Verdict {
    Pass,
    Fail,
    /// A soft band missed; reported, not fatal.
    SoftMiss,
}

struct Gate {
    hard_failures: usize,
}

impl Gate {
    fn report(&mut self, id: u32, name: &str, verdict: Verdict, detail: String) {
        let tag = match verdict {
            Verdict::Pass => "PASS",
            Verdict::Fail => {
                self.hard_failures += 1;
                "FAIL"
            }
            Verdict::SoftMiss => "SOFT-MISS",
        };
        println!("[{tag:>9}] {id:>2}. {name}: {detail}");
    }
}

fn verdict(ok: bool) -> Verdict {
    if ok {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

fn table() -> (Scenario, GroupingPlan) {
    let s = table_scenario(1).expect("table scenario");
    let p = GroupingPlan::build(&s).expect("plan");
    (s, p)
}

fn table_floor(s: &Scenario) -> f64 {
    UtilityFloor::Rate(TABLE_UTILITY)
        .to_prime(s.len(), &s.radio)
        .unwrap()
}

fn solver_vs_oracle(gate: &mut Gate) {
    const STEP: f64 = 2e-3;
    let start = Instant::now();
    let opts = SolverOptions::default();
    let mut worst_gap = f64::NEG_INFINITY;
    let mut worst_kkt: f64 = 0.0;
    let mut ok = true;
    for k in 0..20u64 {
        let n = 2 + (k % 2) as usize;
        let s = generate_disk_scenario(n, 20.0, 1.0, RadioParams::default(), 100 + k).unwrap();
        let p = GroupingPlan::build(&s).unwrap();
        let ceiling = utility_ceiling(&p).u_prime_max;
        // 80 % of the way from -∞: a floor 20 % of |U'_max| below the ceiling
        let uc = ceiling - 0.2 * ceiling.abs();
        let sol = solve_ucem(&p, uc, &opts).unwrap();
        let oracle = grid_oracle(&p, uc, STEP).unwrap();
        let slack = STEP * p.tx_power.iter().sum::<f64>();
        worst_gap = worst_gap.max(sol.avg_power_watts - oracle.energy);
        worst_kkt = worst_kkt.max(sol.kkt_residual);
        ok &= sol.status == Status::Optimal;
        ok &= sol.avg_power_watts <= oracle.energy + slack;
        ok &= oracle.energy <= sol.avg_power_watts + slack;
        ok &= sol.kkt_residual < 1e-8;
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(10);
    gate.report(
        1,
        "solver vs grid oracle",
        verdict(ok),
        format!(
            "20 instances, max(solver − oracle) = {worst_gap:.3e} W, max KKT = {worst_kkt:.2e}, {:.2?}",
            elapsed
        ),
    );
}

fn utility_identity(gate: &mut Gate) {
    let (_, p) = table();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let q: Vec<f64> = (0..p.num_nodes())
            .map(|_| rng.random_range(1e-9..1.0))
            .collect();
        let product_form: f64 = per_node_throughput(&q, &p)
            .unwrap()
            .iter()
            .map(|s| s.ln())
            .sum();
        let separable = utility_prime(&q, &p).unwrap();
        worst = worst.max((product_form - separable).abs() / product_form.abs());
    }
    gate.report(
        2,
        "utility identity",
        verdict(worst < 1e-12),
        format!("max relative error {worst:.2e} over 1000 draws"),
    );
}

fn ceiling_formula(gate: &mut Gate) {
    let mut ok = true;
    let mut notes = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in [2usize, 3, 5] {
        let p = GroupingPlan::from_assignment(vec![1.0, 0.25], vec![0; n], vec![0.2; n]).unwrap();
        let c = utility_ceiling(&p);
        ok &= c.q_star.iter().all(|&q| q == 1.0 / n as f64);
        for _ in 0..1000 {
            let q: Vec<f64> = (0..n).map(|_| rng.random_range(1e-9..1.0)).collect();
            ok &= utility_prime(&q, &p).unwrap() <= c.u_prime_max;
        }
        // the utility is a sum of identical per-node terms, so the grid
        // maximum is attained coordinate-wise and on the diagonal
        let grid: Vec<f64> = (1..1000).map(|k| k as f64 * 1e-3).collect();
        let (arg, best) = grid
            .iter()
            .map(|&q| (q, utility_prime(&vec![q; n], &p).unwrap()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        ok &= best <= c.u_prime_max;
        ok &= (arg - 1.0 / n as f64).abs() <= 1e-3;
        notes.push(format!(
            "n={n}: q*={:.4}, grid argmax {arg:.3}",
            1.0 / n as f64
        ));
    }
    gate.report(
        3,
        "ceiling formula (1/n Aloha optimum)",
        verdict(ok),
        notes.join("; "),
    );
}

fn monte_carlo_checks(gate: &mut Gate) {
    let (s, p) = table();
    let uc = table_floor(&s);
    let sol = solve_ucem(&p, uc, &SolverOptions::default()).unwrap();
    let analytic = per_node_throughput(&sol.q, &p).unwrap();
    let models = [
        ReceptionModel::PerfectCapture,
        ReceptionModel::sinr(s.radio.beta).unwrap(),
    ];
    let start = Instant::now();
    let reps = estimate_throughput_models(&s, &p, &sol.q, &models, 200_000, 1).unwrap();
    let elapsed = start.elapsed();
    let cap = &reps[0];
    let inside = (0..s.len())
        .filter(|&j| (cap.empirical_s[j] - analytic[j]).abs() <= 3.0 * cap.std_err[j])
        .count();
    let frac = inside as f64 / s.len() as f64;
    gate.report(
        4,
        "Monte Carlo vs analytic throughput",
        verdict(frac >= 0.95 && elapsed < Duration::from_secs(10)),
        format!(
            "{inside}/{} nodes within 3 SE, 2e5 slots in {:.2?}",
            s.len(),
            elapsed
        ),
    );

    let sinr = &reps[1];
    let devs: Vec<f64> = (0..s.len())
        .filter(|&j| cap.successes[j] > 0)
        .map(|j| (sinr.empirical_s[j] - cap.empirical_s[j]).abs() / cap.empirical_s[j])
        .collect();
    let mean = devs.iter().sum::<f64>() / devs.len() as f64;
    gate.report(
        5,
        "SINR vs perfect-capture closeness",
        verdict(mean < 0.10),
        format!(
            "mean relative deviation {:.2}% over {} nodes (a lone adjacent-group interferer sits exactly at β and fails the strict SINR test)",
            100.0 * mean,
            devs.len()
        ),
    );
}

fn sweeps(gate: &mut Gate) {
    let (s, p) = table();
    let opts = SolverOptions::default();
    let floors: Vec<UtilityFloor> = linspace(TABLE_UTILITY - 35.0, TABLE_UTILITY + 35.0, 8)
        .into_iter()
        .map(UtilityFloor::Rate)
        .collect();

    let energy = energy_sweep(&s, &p, &floors, &opts).unwrap();
    let all_feasible = energy.iter().all(|r| r.reduction_pct.is_some());
    let dominance = all_feasible
        && energy
            .iter()
            .all(|r| r.optimal_power.unwrap() <= r.uniform_power.unwrap());
    gate.report(
        6,
        "energy dominance (hard)",
        verdict(dominance),
        format!("optimal ≤ uniform at all {} points", energy.len()),
    );
    let mut red: Vec<f64> = energy.iter().filter_map(|r| r.reduction_pct).collect();
    red.sort_by(f64::total_cmp);
    let median = if red.is_empty() {
        f64::NAN
    } else if red.len().is_multiple_of(2) {
        0.5 * (red[red.len() / 2 - 1] + red[red.len() / 2])
    } else {
        red[red.len() / 2]
    };
    gate.report(
        6,
        "energy reduction band 5–15% (soft)",
        if (5.0..=15.0).contains(&median) {
            Verdict::Pass
        } else {
            Verdict::SoftMiss
        },
        format!("median reduction {median:.2}%"),
    );

    let energy_monotone = energy
        .windows(2)
        .all(|w| w[0].optimal_power.unwrap() <= w[1].optimal_power.unwrap());
    let life = lifetime_sweep(&s, &p, &floors, DEFAULT_DEATH_FRACTION, 1, false, &opts).unwrap();
    let life_monotone = life.windows(2).all(|w| {
        w[0].lifetime_optimal.unwrap() >= w[1].lifetime_optimal.unwrap()
            && w[0].lifetime_uniform.unwrap() >= w[1].lifetime_uniform.unwrap()
    });
    gate.report(
        7,
        "energy ↑ and lifetime ↓ in U_c (hard)",
        verdict(energy_monotone && life_monotone),
        format!(
            "energy {:.4}→{:.4} W, optimal lifetime {:.3e}→{:.3e} s",
            energy[0].optimal_power.unwrap(),
            energy.last().unwrap().optimal_power.unwrap(),
            life[0].lifetime_optimal_seconds.unwrap(),
            life.last().unwrap().lifetime_optimal_seconds.unwrap(),
        ),
    );
    let longer = life
        .iter()
        .filter(|r| r.lifetime_optimal.unwrap() >= r.lifetime_uniform.unwrap())
        .count();
    let ratio = life[life.len() / 2].lifetime_optimal.unwrap() as f64
        / life[life.len() / 2].lifetime_uniform.unwrap() as f64;
    gate.report(
        7,
        "optimal lifetime ≥ uniform (soft)",
        if longer == life.len() {
            Verdict::Pass
        } else {
            Verdict::SoftMiss
        },
        format!(
            "{longer}/{} points; optimal/uniform lifetime ratio {ratio:.3} at mid-sweep",
            life.len()
        ),
    );
}

fn protocol_consistency(gate: &mut Gate) {
    let opts = SolverOptions::default();
    let mut worst: f64 = 0.0;
    let mut ok = true;
    let mut sizes = Vec::new();
    for k in 0..10u64 {
        let n = [5usize, 10, 20, 50, 120][k as usize % 5];
        let s = generate_disk_scenario(n, 20.0, 1.0, RadioParams::default(), 500 + k).unwrap();
        let p = GroupingPlan::build(&s).unwrap();
        let ceiling = utility_ceiling(&p).u_prime_max;
        let sol = solve_ucem(&p, ceiling * 1.5, &opts).unwrap();
        let (setup, assign) = bs_emit(&p, &sol, &s.radio).unwrap();
        let setup: SetupMessage = serde_json::from_str(&setup.to_json()).unwrap();
        let assign: AssignMessage = serde_json::from_str(&assign.to_json()).unwrap();
        for (j, node) in s.nodes.iter().enumerate() {
            let st = node_apply(&setup, &assign, node.gain).unwrap();
            worst = worst.max((st.q - sol.q[j]).abs());
        }
        let m = p.num_groups();
        ok &= setup.payload_scalars() == m + 3 && assign.payload_scalars() == m + 2;
        sizes.push(format!(
            "N={n}/M={m}→{}",
            setup.payload_scalars() + assign.payload_scalars()
        ));
    }
    ok &= worst <= 1e-12;
    gate.report(
        8,
        "protocol consistency",
        verdict(ok),
        format!(
            "max |q_node − q_central| = {worst:.1e}; payload {}",
            sizes.join(", ")
        ),
    );
}

fn single_node(gate: &mut Gate) {
    let radio = RadioParams::default();
    let s = Scenario::from_distances(&[7.0], 20.0, 1.0, radio).unwrap();
    let p = GroupingPlan::build(&s).unwrap();
    let uc = 0.4f64.ln();
    let sol = solve_ucem(&p, uc, &SolverOptions::default()).unwrap();
    let q = uc.exp();
    let pw = radio.base_power;
    let life = simulate_lifetime(&s, &p, &sol.q, DEFAULT_DEATH_FRACTION, 1).unwrap();
    let analytic = radio.battery / (pw * radio.slot_duration * q);
    let sim = life.network_lifetime_slots.unwrap() as f64;
    let ok = (sol.q[0] - q).abs() < 1e-9
        && (sol.avg_power_watts - pw * q).abs() < 1e-9
        && (sol.lambda - pw * q).abs() < 1e-9
        && (sim - analytic).abs() < 0.01 * analytic;
    gate.report(
        9,
        "single-node closed forms",
        verdict(ok),
        format!(
            "q = {:.9}, power = {:.9} W, λ = {:.9}, lifetime {sim:.0} vs {analytic:.0} slots",
            sol.q[0], sol.avg_power_watts, sol.lambda
        ),
    );
}

fn concavity(gate: &mut Gate) {
    let h = 1e-3;
    let mut worst = f64::NEG_INFINITY;
    for s in 1..=50 {
        for k in 1..=99 {
            let q = k as f64 / 100.0;
            let d2 = phi(q - h, s).unwrap() - 2.0 * phi(q, s).unwrap() + phi(q + h, s).unwrap();
            worst = worst.max(d2);
        }
    }
    gate.report(
        10,
        "concavity of per-node utility",
        verdict(worst <= 0.0),
        format!("max second difference {worst:.3e}"),
    );
}

fn main() {
    let mut gate = Gate { hard_failures: 0 };
    solver_vs_oracle(&mut gate);
    utility_identity(&mut gate);
    ceiling_formula(&mut gate);
    monte_carlo_checks(&mut gate);
    sweeps(&mut gate);
    protocol_consistency(&mut gate);
    single_node(&mut gate);
    concavity(&mut gate);
    if gate.hard_failures > 0 {
        println!("{} hard criteria failed", gate.hard_failures);
        std::process::exit(1);
    }
    println!("all hard criteria passed");
}
