//! Closed-form throughput, utility and energy under perfect capture.
//!
//! A packet from a node in group `i` is decoded iff nobody else in groups
//! `1..=i` transmits in the same slot. Taking logs of the per-node success
//! probabilities and regrouping, the log-utility separates into one concave
//! term per node:
//!
//! ```text
//! φ(q; S) = ln q + (S − 1) · ln(1 − q)
//! ```
//!
//! where `S` is the suffix count of the node's group. All logarithms are
//! natural.

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::grouping::GroupingPlan;
use crate::model::RadioParams;

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::Dimension { expected, got });
    }
    Ok(())
}

fn check_probs(q: &[f64]) -> Result<()> {
    match q.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        Some(x) => domain(format!("probability {x} outside [0, 1]")),
        None => Ok(()),
    }
}

/// Per-node success probability per slot.
///
/// Computed directly as a product over the other nodes of groups at or
/// above the node's own, using prefix/suffix products within a group so
/// no division by `1 − q` is needed.
pub fn per_node_throughput(q: &[f64], plan: &GroupingPlan) -> Result<Vec<f64>> {
    check_len(plan.num_nodes(), q.len())?;
    check_probs(q)?;

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); plan.num_groups()];
    for (j, &g) in plan.group_of.iter().enumerate() {
        members[g].push(j);
    }

    let mut out = vec![0.0; q.len()];
    let mut idle_above = 1.0;
    for group in &members {
        let k = group.len();
        // prefix[t] = Π_{s<t} (1 − q_s) within the group
        let mut prefix = vec![1.0; k + 1];
        for (t, &j) in group.iter().enumerate() {
            prefix[t + 1] = prefix[t] * (1.0 - q[j]);
        }
        let mut suffix = 1.0;
        for t in (0..k).rev() {
            let j = group[t];
            out[j] = q[j] * idle_above * prefix[t] * suffix;
            suffix *= 1.0 - q[j];
        }
        idle_above *= prefix[k];
    }
    Ok(out)
}

/// Per-node utility term for a node in a group with suffix count `suffix`.
///
/// Returns `-∞` at `q = 0`, and at `q = 1` unless the node is alone in the
/// suffix (`suffix == 1`), where the term is `ln 1 = 0`.
pub fn phi(q: f64, suffix: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return domain(format!("probability {q} outside [0, 1]"));
    }
    if suffix == 0 {
        return domain("suffix count must be at least 1");
    }
    if q == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    if suffix == 1 {
        return Ok(q.ln());
    }
    if q == 1.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(q.ln() + (suffix - 1) as f64 * (-q).ln_1p())
}

/// First derivative of [`phi`] in `q`.
pub fn phi_prime(q: f64, suffix: usize) -> f64 {
    1.0 / q - (suffix as f64 - 1.0) / (1.0 - q)
}

/// Sum of per-node utility terms.
pub fn utility_prime(q: &[f64], plan: &GroupingPlan) -> Result<f64> {
    check_len(plan.num_nodes(), q.len())?;
    q.iter()
        .zip(&plan.group_of)
        .map(|(&qj, &g)| phi(qj, plan.suffix_count[g]))
        .sum()
}

/// Utility figures for one probability vector.
#[derive(Debug, Clone, Serialize)]
pub struct UtilityReport {
    /// Sum of log success probabilities.
    pub u_prime: f64,
    /// Sum of log effective rates.
    pub u: f64,
    pub phi: Vec<f64>,
}

pub fn utility_report(
    q: &[f64],
    plan: &GroupingPlan,
    radio: &RadioParams,
) -> Result<UtilityReport> {
    check_len(plan.num_nodes(), q.len())?;
    let phi = q
        .iter()
        .zip(&plan.group_of)
        .map(|(&qj, &g)| phi(qj, plan.suffix_count[g]))
        .collect::<Result<Vec<_>>>()?;
    let u_prime: f64 = phi.iter().sum();
    let scale = rate_scale(radio.packet_bits, radio.slot_duration)?;
    Ok(UtilityReport {
        u_prime,
        u: u_prime + q.len() as f64 * scale.ln(),
        phi,
    })
}

fn rate_scale(packet_bits: u64, slot_duration: f64) -> Result<f64> {
    if slot_duration.is_nan() || slot_duration <= 0.0 {
        return domain(format!("slot duration must be > 0, got {slot_duration}"));
    }
    Ok(packet_bits as f64 / slot_duration)
}

/// Effective rates `x = L · S / T` in bits per second.
pub fn effective_rates(s: &[f64], packet_bits: u64, slot_duration: f64) -> Result<Vec<f64>> {
    let scale = rate_scale(packet_bits, slot_duration)?;
    if let Some(v) = s.iter().find(|v| v.is_nan() || **v < 0.0) {
        return domain(format!("success probability {v} is negative"));
    }
    Ok(s.iter().map(|v| v * scale).collect())
}

/// Converts an effective-rate utility floor into the success-probability
/// form: `U'_c = U_c − N · ln(L / T)`.
pub fn convert_utility(u_c: f64, n: usize, packet_bits: u64, slot_duration: f64) -> Result<f64> {
    Ok(u_c - n as f64 * rate_scale(packet_bits, slot_duration)?.ln())
}

/// Inverse of [`convert_utility`].
pub fn to_rate_utility(
    u_prime: f64,
    n: usize,
    packet_bits: u64,
    slot_duration: f64,
) -> Result<f64> {
    Ok(u_prime + n as f64 * rate_scale(packet_bits, slot_duration)?.ln())
}

/// Maximizer of the utility and its value.
#[derive(Debug, Clone)]
pub struct Ceiling {
    pub q_star: Vec<f64>,
    pub u_prime_max: f64,
}

/// Each term is maximized independently at `q = 1 / S`.
pub fn utility_ceiling(plan: &GroupingPlan) -> Ceiling {
    let q_star: Vec<f64> = plan
        .group_of
        .iter()
        .map(|&g| 1.0 / plan.suffix_count[g] as f64)
        .collect();
    let u_prime_max = q_star
        .iter()
        .zip(&plan.group_of)
        .map(|(&q, &g)| phi(q, plan.suffix_count[g]).expect("q* in (0, 1]"))
        .sum();
    Ceiling {
        q_star,
        u_prime_max,
    }
}

/// `Σ P_ij q_ij` in watts.
pub fn average_power(q: &[f64], tx_power: &[f64]) -> Result<f64> {
    check_len(tx_power.len(), q.len())?;
    Ok(q.iter().zip(tx_power).map(|(a, b)| a * b).sum())
}

/// Average energy per slot in joules.
pub fn energy_per_slot(q: &[f64], tx_power: &[f64], slot_duration: f64) -> Result<f64> {
    Ok(average_power(q, tx_power)? * slot_duration)
}
