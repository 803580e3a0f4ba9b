//! Capture-oriented node classification and power control.
//!
//! Nodes are split into groups by a geometric ladder of gain thresholds
//! `G_1 > G_2 > … > G_{M+1}` with `G_{i+1} = G_i / β`. A node with gain
//! `G_{i+1} < g ≤ G_i` belongs to group `i` and transmits at `P · G_i / g`,
//! so every member of a group arrives at the base station with power
//! `P · G_i` and adjacent groups are separated by exactly `β`.
//!
//! Group indices are zero-based in code; files and reports print them
//! one-based.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::model::Scenario;

/// Threshold ladder anchored at the largest gain and extended by division
/// by `beta` until it drops strictly below the smallest gain.
///
/// The returned vector has `M + 1` entries for `M` groups.
pub fn compute_thresholds(gains: &[f64], beta: f64) -> Result<Vec<f64>> {
    if gains.is_empty() {
        return domain("threshold ladder needs at least one gain");
    }
    if !(beta > 1.0 && beta.is_finite()) {
        return domain(format!("beta must be > 1, got {beta}"));
    }
    if let Some(g) = gains.iter().find(|g| !(**g > 0.0 && g.is_finite())) {
        return domain(format!("gains must be positive and finite, got {g}"));
    }
    let g_max = gains.iter().copied().fold(f64::MIN, f64::max);
    let g_min = gains.iter().copied().fold(f64::MAX, f64::min);

    let mut thresholds = vec![g_max];
    let mut last = g_max;
    while last >= g_min {
        last /= beta;
        thresholds.push(last);
    }
    Ok(thresholds)
}

/// Zero-based group of `gain` on the ladder: the `i` with
/// `thresholds[i + 1] < gain ≤ thresholds[i]`.
pub fn group_index(thresholds: &[f64], gain: f64) -> Result<usize> {
    let m = thresholds.len().saturating_sub(1);
    if m == 0 {
        return domain("threshold ladder needs at least two entries");
    }
    let (upper, lower) = (thresholds[0], thresholds[m]);
    if !(gain <= upper && gain > lower) {
        return Err(Error::GainOutOfRange { gain, lower, upper });
    }
    // Lower thresholds at or above `gain` are exactly the groups ranked above it.
    let above = thresholds[1..].partition_point(|&t| t >= gain);
    Ok(above)
}

/// Transmit power `P · G_i / g` for each node.
pub fn assign_powers(
    group_of: &[usize],
    thresholds: &[f64],
    gains: &[f64],
    base_power: f64,
) -> Result<Vec<f64>> {
    if group_of.len() != gains.len() {
        return Err(Error::Dimension {
            expected: group_of.len(),
            got: gains.len(),
        });
    }
    group_of
        .iter()
        .zip(gains)
        .map(|(&g, &gain)| match thresholds.get(g) {
            Some(&top) => Ok(base_power * (top / gain)),
            None => domain(format!("group {g} has no threshold")),
        })
        .collect()
}

/// Node-to-group assignment with transmit powers and per-group counts.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupingPlan {
    /// Descending gain thresholds, `M + 1` entries.
    pub thresholds: Vec<f64>,
    /// Zero-based group of each node.
    pub group_of: Vec<usize>,
    /// Transmit power per node, watts.
    pub tx_power: Vec<f64>,
    /// Nodes per group, `M` entries.
    pub group_sizes: Vec<usize>,
    /// `suffix_count[i]` = nodes in groups `i..M`.
    pub suffix_count: Vec<usize>,
}

/// Classifies every node of `scenario` on `thresholds` and sets powers.
pub fn assign_groups(scenario: &Scenario, thresholds: &[f64]) -> Result<GroupingPlan> {
    let gains = scenario.gains();
    let group_of = gains
        .iter()
        .map(|&g| group_index(thresholds, g))
        .collect::<Result<Vec<_>>>()?;
    let tx_power = assign_powers(&group_of, thresholds, &gains, scenario.radio.base_power)?;
    GroupingPlan::from_assignment(thresholds.to_vec(), group_of, tx_power)
}

impl GroupingPlan {
    /// Ladder, classification and powers for a scenario.
    pub fn build(scenario: &Scenario) -> Result<Self> {
        let thresholds = compute_thresholds(&scenario.gains(), scenario.radio.beta)?;
        assign_groups(scenario, &thresholds)
    }

    /// Plan from an explicit assignment; counts are derived.
    pub fn from_assignment(
        thresholds: Vec<f64>,
        group_of: Vec<usize>,
        tx_power: Vec<f64>,
    ) -> Result<Self> {
        if group_of.is_empty() {
            return domain("plan needs at least one node");
        }
        if tx_power.len() != group_of.len() {
            return Err(Error::Dimension {
                expected: group_of.len(),
                got: tx_power.len(),
            });
        }
        let m = thresholds.len().saturating_sub(1);
        if m == 0 {
            return domain("threshold ladder needs at least two entries");
        }
        let mut group_sizes = vec![0usize; m];
        for &g in &group_of {
            if g >= m {
                return domain(format!("group index {g} out of range for {m} groups"));
            }
            group_sizes[g] += 1;
        }
        if let Some(p) = tx_power.iter().find(|p| !(**p > 0.0 && p.is_finite())) {
            return domain(format!("transmit powers must be positive, got {p}"));
        }
        let suffix_count = suffix_counts(&group_sizes);
        Ok(GroupingPlan {
            thresholds,
            group_of,
            tx_power,
            group_sizes,
            suffix_count,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.group_of.len()
    }

    pub fn num_groups(&self) -> usize {
        self.group_sizes.len()
    }

    /// Suffix count of the group node `node` belongs to.
    pub fn node_suffix(&self, node: usize) -> usize {
        self.suffix_count[self.group_of[node]]
    }

    /// Per-node suffix counts.
    pub fn node_suffixes(&self) -> Vec<usize> {
        self.group_of
            .iter()
            .map(|&g| self.suffix_count[g])
            .collect()
    }

    /// Plan over the nodes with `keep[j] == true`, same ladder, recounted.
    /// Returns the plan and the original indices of the kept nodes.
    pub fn restrict(&self, keep: &[bool]) -> Result<(Self, Vec<usize>)> {
        if keep.len() != self.num_nodes() {
            return Err(Error::Dimension {
                expected: self.num_nodes(),
                got: keep.len(),
            });
        }
        let idx: Vec<usize> = (0..keep.len()).filter(|&j| keep[j]).collect();
        let plan = Self::from_assignment(
            self.thresholds.clone(),
            idx.iter().map(|&j| self.group_of[j]).collect(),
            idx.iter().map(|&j| self.tx_power[j]).collect(),
        )?;
        Ok((plan, idx))
    }

    pub fn to_file(&self, node_ids: &[usize]) -> PlanFile {
        PlanFile {
            thresholds: self.thresholds.clone(),
            groups: self
                .group_of
                .iter()
                .zip(&self.tx_power)
                .zip(node_ids)
                .map(|((&g, &p), &id)| PlanNodeFile {
                    node_id: id,
                    group: g + 1,
                    p_ij_watts: p,
                })
                .collect(),
        }
    }
}

/// `S_i = Σ_{k ≥ i} n_k`.
pub fn suffix_counts(group_sizes: &[usize]) -> Vec<usize> {
    let mut out = vec![0; group_sizes.len()];
    let mut acc = 0;
    for i in (0..group_sizes.len()).rev() {
        acc += group_sizes[i];
        out[i] = acc;
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PlanNodeFile {
    pub node_id: usize,
    /// One-based group index.
    pub group: usize,
    #[serde(rename = "P_ij_watts")]
    pub p_ij_watts: f64,
}

/// Inspection dump of a plan.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PlanFile {
    pub thresholds: Vec<f64>,
    pub groups: Vec<PlanNodeFile>,
}
