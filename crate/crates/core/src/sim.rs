//! Slot-level Monte Carlo and battery-depletion lifetime simulation.
//!
//! Random draws come from ChaCha8 streams addressed by `(node, slot)`: node
//! `j` owns stream `j` and consumes one 64-bit word per slot. Any batch of
//! slots can therefore seek straight to its position, and results do not
//! depend on how slots are split across threads.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::grouping::GroupingPlan;
use crate::model::Scenario;

/// Received-power ratios within this relative distance of a decision
/// threshold count as ties, and ties never capture.
pub const TIE_RTOL: f64 = 1e-9;

const SLOT_BATCH: u64 = 4096;
const THROUGHPUT_TAG: u64 = 0x5107_7a11_0000_0001;
const LIFETIME_TAG: u64 = 0x5107_7a11_0000_0002;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReceptionModel {
    /// The unique strongest packet is decoded.
    PerfectCapture,
    /// A packet is decoded iff its power exceeds `beta` times the sum of
    /// all other received powers. Noise is ignored.
    SinrThreshold { beta: f64 },
}

impl ReceptionModel {
    pub fn sinr(beta: f64) -> Result<Self> {
        if !(beta > 1.0 && beta.is_finite()) {
            return domain(format!("SINR threshold must be > 1, got {beta}"));
        }
        Ok(ReceptionModel::SinrThreshold { beta })
    }

    pub fn name(&self) -> &'static str {
        match self {
            ReceptionModel::PerfectCapture => "capture",
            ReceptionModel::SinrThreshold { .. } => "sinr",
        }
    }
}

/// Which of the transmitters `(node, received_power)` gets through, if any.
pub fn slot_outcome(transmitters: &[(usize, f64)], model: ReceptionModel) -> Option<usize> {
    let (&(first, _), rest) = transmitters.split_first()?;
    if rest.is_empty() {
        return Some(first);
    }
    let mut best = 0;
    for (k, t) in transmitters.iter().enumerate() {
        if t.1 > transmitters[best].1 {
            best = k;
        }
    }
    let (winner, top) = transmitters[best];
    let others = transmitters
        .iter()
        .enumerate()
        .filter(|(k, _)| *k != best)
        .map(|(_, t)| t.1);
    let captured = match model {
        ReceptionModel::PerfectCapture => {
            let second = others.fold(f64::NEG_INFINITY, f64::max);
            top > second * (1.0 + TIE_RTOL)
        }
        ReceptionModel::SinrThreshold { beta } => {
            let interference: f64 = others.sum();
            top > beta * interference * (1.0 + TIE_RTOL)
        }
    };
    captured.then_some(winner)
}

#[inline]
fn unit_closed_open(x: u64) -> f64 {
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[inline]
fn unit_open(x: u64) -> f64 {
    ((x >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

fn node_stream(seed: u64, tag: u64, node: usize, word: u128) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ tag);
    rng.set_stream(node as u64);
    rng.set_word_pos(word);
    rng
}

/// Success counts for slots `start..end` under each of `models`, with one
/// shared set of transmission draws.
pub fn count_successes(
    rx_power: &[f64],
    q: &[f64],
    models: &[ReceptionModel],
    start: u64,
    end: u64,
    seed: u64,
) -> Vec<Vec<u64>> {
    let n = rx_power.len();
    let zero = || vec![vec![0u64; n]; models.len()];
    if end <= start {
        return zero();
    }
    let batches = (end - start).div_ceil(SLOT_BATCH);
    (0..batches)
        .into_par_iter()
        .map(|b| {
            let lo = start + b * SLOT_BATCH;
            let hi = (lo + SLOT_BATCH).min(end);
            let mut rngs: Vec<ChaCha8Rng> = (0..n)
                .map(|j| node_stream(seed, THROUGHPUT_TAG, j, 2 * lo as u128))
                .collect();
            let mut counts = zero();
            let mut tx = Vec::with_capacity(n);
            for _ in lo..hi {
                tx.clear();
                for (j, rng) in rngs.iter_mut().enumerate() {
                    if unit_closed_open(rng.next_u64()) < q[j] {
                        tx.push((j, rx_power[j]));
                    }
                }
                for (m, model) in models.iter().enumerate() {
                    if let Some(w) = slot_outcome(&tx, *model) {
                        counts[m][w] += 1;
                    }
                }
            }
            counts
        })
        .reduce(zero, |mut a, b| {
            for (am, bm) in a.iter_mut().zip(b) {
                for (x, y) in am.iter_mut().zip(bm) {
                    *x += y;
                }
            }
            a
        })
}

/// Empirical per-node throughput.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimReport {
    pub model: ReceptionModel,
    pub slots: u64,
    pub seed: u64,
    pub successes: Vec<u64>,
    pub empirical_s: Vec<f64>,
    pub std_err: Vec<f64>,
}

impl SimReport {
    fn from_counts(model: ReceptionModel, slots: u64, seed: u64, successes: Vec<u64>) -> Self {
        let (empirical_s, std_err) = successes
            .iter()
            .map(|&c| {
                let p = c as f64 / slots as f64;
                (p, (p * (1.0 - p) / slots as f64).sqrt())
            })
            .unzip();
        SimReport {
            model,
            slots,
            seed,
            successes,
            empirical_s,
            std_err,
        }
    }

    /// Pools two runs of the same model over disjoint slots.
    pub fn merge(&self, other: &SimReport) -> Result<SimReport> {
        if self.model != other.model {
            return domain("cannot merge reports of different reception models");
        }
        if self.successes.len() != other.successes.len() {
            return Err(Error::Dimension {
                expected: self.successes.len(),
                got: other.successes.len(),
            });
        }
        let counts = self
            .successes
            .iter()
            .zip(&other.successes)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Self::from_counts(
            self.model,
            self.slots + other.slots,
            self.seed,
            counts,
        ))
    }

    pub fn rows(&self) -> Vec<SimRow> {
        (0..self.successes.len())
            .map(|j| SimRow {
                node_id: j,
                successes: self.successes[j],
                empirical_s: self.empirical_s[j],
                std_err: self.std_err[j],
            })
            .collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SimRow {
    pub node_id: usize,
    pub successes: u64,
    #[serde(rename = "empirical_S")]
    pub empirical_s: f64,
    pub std_err: f64,
}

fn check_inputs(scenario: &Scenario, plan: &GroupingPlan, q: &[f64]) -> Result<()> {
    let n = scenario.len();
    for got in [plan.num_nodes(), q.len()] {
        if got != n {
            return Err(Error::Dimension { expected: n, got });
        }
    }
    match q.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        Some(x) => domain(format!("probability {x} outside [0, 1]")),
        None => Ok(()),
    }
}

fn received_powers(scenario: &Scenario, plan: &GroupingPlan) -> Vec<f64> {
    plan.tx_power
        .iter()
        .zip(&scenario.nodes)
        .map(|(p, n)| p * n.gain)
        .collect()
}

/// Runs `slots` slots with every node transmitting independently with its
/// probability, scoring each slot under every model in `models`.
pub fn estimate_throughput_models(
    scenario: &Scenario,
    plan: &GroupingPlan,
    q: &[f64],
    models: &[ReceptionModel],
    slots: u64,
    seed: u64,
) -> Result<Vec<SimReport>> {
    check_inputs(scenario, plan, q)?;
    if slots == 0 {
        return domain("need at least one slot");
    }
    let rx = received_powers(scenario, plan);
    let counts = count_successes(&rx, q, models, 0, slots, seed);
    Ok(models
        .iter()
        .zip(counts)
        .map(|(m, c)| SimReport::from_counts(*m, slots, seed, c))
        .collect())
}

pub fn estimate_throughput(
    scenario: &Scenario,
    plan: &GroupingPlan,
    q: &[f64],
    model: ReceptionModel,
    slots: u64,
    seed: u64,
) -> Result<SimReport> {
    let mut reports = estimate_throughput_models(scenario, plan, q, &[model], slots, seed)?;
    Ok(reports.remove(0))
}

/// Battery-depletion outcome.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LifetimeReport {
    /// Slot of each node's last affordable transmission; `None` if it never dies.
    pub death_slot: Vec<Option<u64>>,
    /// `E_B / (P_ij · q_ij · T)` per node.
    pub analytic_death_slots: Vec<f64>,
    pub network_lifetime_slots: Option<u64>,
    pub network_lifetime_seconds: Option<f64>,
    pub analytic_network_lifetime_slots: f64,
    pub death_fraction: f64,
    pub seed: u64,
}

impl LifetimeReport {
    pub fn rows(&self) -> Vec<LifetimeRow> {
        (0..self.death_slot.len())
            .map(|j| LifetimeRow {
                node_id: j,
                death_slot: self.death_slot[j],
                analytic_death_slot: self.analytic_death_slots[j],
            })
            .collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LifetimeRow {
    pub node_id: usize,
    pub death_slot: Option<u64>,
    pub analytic_death_slot: f64,
}

/// Packets a full battery pays for at power `tx_power`.
pub fn packets_per_battery(battery: f64, tx_power: f64, slot_duration: f64) -> u64 {
    // guards against 1000 / (0.2 · 0.005) landing just below an integer
    (battery / (tx_power * slot_duration) * (1.0 + 1e-12)).floor() as u64
}

/// Number of deaths that ends the network's life.
fn deaths_required(n: usize, death_fraction: f64) -> usize {
    ((death_fraction * n as f64 - 1e-9).ceil() as usize).clamp(1, n)
}

fn check_fraction(death_fraction: f64) -> Result<()> {
    if !(death_fraction > 0.0 && death_fraction <= 1.0) {
        return domain(format!(
            "death fraction must be in (0, 1], got {death_fraction}"
        ));
    }
    Ok(())
}

/// Slots until the next transmission (≥ 1) by inversion of the geometric
/// law. For a fixed uniform draw it is nonincreasing in `q`.
#[inline]
fn geometric_gap(u: f64, ln_idle: f64) -> u64 {
    (u.ln() / ln_idle).ceil().max(1.0) as u64
}

fn death_time(packets: u64, q: f64, rng: &mut ChaCha8Rng) -> Option<u64> {
    if packets == 0 {
        return Some(0);
    }
    if q <= 0.0 {
        return None;
    }
    if q >= 1.0 {
        return Some(packets);
    }
    let ln_idle = (-q).ln_1p();
    let mut t = 0u64;
    for _ in 0..packets {
        t += geometric_gap(unit_open(rng.next_u64()), ln_idle);
    }
    Some(t)
}

fn network_lifetime(deaths: &[Option<u64>], required: usize) -> Option<u64> {
    let mut d: Vec<u64> = deaths.iter().flatten().copied().collect();
    d.sort_unstable();
    d.get(required - 1).copied()
}

fn analytic_deaths(scenario: &Scenario, plan: &GroupingPlan, q: &[f64]) -> Vec<f64> {
    let r = &scenario.radio;
    plan.tx_power
        .iter()
        .zip(q)
        .map(|(&p, &qj)| r.battery / (p * qj * r.slot_duration))
        .collect()
}

fn assemble(
    scenario: &Scenario,
    plan: &GroupingPlan,
    q: &[f64],
    death_slot: Vec<Option<u64>>,
    death_fraction: f64,
    seed: u64,
) -> LifetimeReport {
    let required = deaths_required(death_slot.len(), death_fraction);
    let network_lifetime_slots = network_lifetime(&death_slot, required);
    let analytic_death_slots = analytic_deaths(scenario, plan, q);
    let mut sorted = analytic_death_slots.clone();
    sorted.sort_by(f64::total_cmp);
    LifetimeReport {
        death_slot,
        analytic_network_lifetime_slots: sorted[required - 1],
        analytic_death_slots,
        network_lifetime_seconds: network_lifetime_slots
            .map(|s| s as f64 * scenario.radio.slot_duration),
        network_lifetime_slots,
        death_fraction,
        seed,
    }
}

/// Battery depletion under a fixed policy.
///
/// Each transmission costs `P_ij · T`; a node dies with the last packet its
/// battery can pay for and never transmits again. Node `j`'s k-th
/// inter-transmission gap is drawn from word `k` of its own stream, so for
/// a fixed seed every death time is nonincreasing in that node's `q`.
pub fn simulate_lifetime(
    scenario: &Scenario,
    plan: &GroupingPlan,
    q: &[f64],
    death_fraction: f64,
    seed: u64,
) -> Result<LifetimeReport> {
    check_inputs(scenario, plan, q)?;
    check_fraction(death_fraction)?;
    let r = scenario.radio;
    let death_slot: Vec<Option<u64>> = (0..q.len())
        .into_par_iter()
        .map(|j| {
            let k = packets_per_battery(r.battery, plan.tx_power[j], r.slot_duration);
            let mut rng = node_stream(seed, LIFETIME_TAG, j, 0);
            death_time(k, q[j], &mut rng)
        })
        .collect();
    Ok(assemble(
        scenario,
        plan,
        q,
        death_slot,
        death_fraction,
        seed,
    ))
}

/// Battery depletion where the policy is recomputed whenever a node dies.
///
/// `policy` receives the alive mask and returns probabilities for all
/// nodes (entries of dead nodes are ignored). The run stops once the death
/// fraction is reached, so nodes still alive at that point report `None`.
pub fn simulate_lifetime_adaptive<F>(
    scenario: &Scenario,
    plan: &GroupingPlan,
    q: &[f64],
    death_fraction: f64,
    seed: u64,
    mut policy: F,
) -> Result<LifetimeReport>
where
    F: FnMut(&[bool]) -> Result<Vec<f64>>,
{
    check_inputs(scenario, plan, q)?;
    check_fraction(death_fraction)?;
    let n = q.len();
    let r = scenario.radio;
    let required = deaths_required(n, death_fraction);

    let mut rngs: Vec<ChaCha8Rng> = (0..n)
        .map(|j| node_stream(seed, LIFETIME_TAG, j, 0))
        .collect();
    let mut remaining: Vec<u64> = plan
        .tx_power
        .iter()
        .map(|&p| packets_per_battery(r.battery, p, r.slot_duration))
        .collect();
    let mut current = q.to_vec();
    let mut alive = vec![true; n];
    let mut death_slot = vec![None; n];
    let mut generation = vec![0u64; n];
    let mut pending: Vec<Option<u64>> = vec![None; n];
    let mut queue = BinaryHeap::new();
    let mut deaths = 0usize;

    let draw = |rng: &mut ChaCha8Rng, q: f64| -> Option<u64> {
        if q <= 0.0 {
            None
        } else if q >= 1.0 {
            Some(1)
        } else {
            Some(geometric_gap(unit_open(rng.next_u64()), (-q).ln_1p()))
        }
    };

    let mut changed = false;
    for j in 0..n {
        if remaining[j] == 0 {
            alive[j] = false;
            death_slot[j] = Some(0);
            deaths += 1;
            changed = true;
        }
    }
    if changed && deaths < required {
        current = policy(&alive)?;
    }
    if deaths < required {
        for j in (0..n).filter(|&j| alive[j]) {
            if let Some(g) = draw(&mut rngs[j], current[j]) {
                pending[j] = Some(g);
                queue.push(Reverse((g, j, generation[j])));
            }
        }
    }

    while deaths < required {
        let Some(Reverse((t, j, gen))) = queue.pop() else {
            break;
        };
        if gen != generation[j] || !alive[j] {
            continue;
        }
        remaining[j] -= 1;
        pending[j] = None;
        if remaining[j] > 0 {
            if let Some(g) = draw(&mut rngs[j], current[j]) {
                pending[j] = Some(t + g);
                queue.push(Reverse((t + g, j, generation[j])));
            }
            continue;
        }
        alive[j] = false;
        death_slot[j] = Some(t);
        deaths += 1;
        if deaths >= required {
            break;
        }
        let next = policy(&alive)?;
        if next.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: next.len(),
            });
        }
        for i in (0..n).filter(|&i| alive[i]) {
            if next[i] == current[i] || pending[i] == Some(t) {
                continue;
            }
            // memoryless: the next attempt after slot t is redrawn under the new q
            generation[i] += 1;
            pending[i] = draw(&mut rngs[i], next[i]).map(|g| t + g);
            if let Some(at) = pending[i] {
                queue.push(Reverse((at, i, generation[i])));
            }
        }
        current = next;
    }
    Ok(assemble(
        scenario,
        plan,
        q,
        death_slot,
        death_fraction,
        seed,
    ))
}
