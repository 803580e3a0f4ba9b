//! Base-station / node message exchange.
//!
//! The base station broadcasts the threshold ladder once at start-up and,
//! after each solve, only the per-group node counts and the multiplier.
//! Every node then derives its group, transmit power and probability from
//! its own gain, so the broadcast size depends on the number of groups and
//! not on the number of nodes.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::grouping::{group_index, suffix_counts, GroupingPlan};
use crate::model::RadioParams;
use crate::solver::{stationary_prob, Solution, Status};

/// Start-up broadcast.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetupMessage {
    pub thresholds: Vec<f64>,
    #[serde(rename = "P")]
    pub base_power: f64,
    pub beta: f64,
}

/// Per-solve broadcast.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignMessage {
    pub counts: Vec<usize>,
    pub lambda: f64,
    /// Set when the utility floor sits at the ceiling; nodes then use `1/S`.
    pub at_ceiling: bool,
}

impl SetupMessage {
    pub fn payload_scalars(&self) -> usize {
        self.thresholds.len() + 2
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("setup serializes")
    }
}

impl AssignMessage {
    pub fn payload_scalars(&self) -> usize {
        self.counts.len() + 2
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("assign serializes")
    }
}

/// What a node holds after applying both broadcasts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NodeState {
    pub gain: f64,
    /// Zero-based.
    pub group: usize,
    pub tx_power: f64,
    pub q: f64,
}

/// Builds the two broadcasts for a solved plan.
pub fn bs_emit(
    plan: &GroupingPlan,
    solution: &Solution,
    radio: &RadioParams,
) -> Result<(SetupMessage, AssignMessage)> {
    if solution.q.len() != plan.num_nodes() {
        return Err(Error::Dimension {
            expected: plan.num_nodes(),
            got: solution.q.len(),
        });
    }
    if !(solution.lambda >= 0.0 && solution.lambda.is_finite()) {
        return domain(format!(
            "solution has no usable multiplier ({})",
            solution.lambda
        ));
    }
    let setup = SetupMessage {
        thresholds: plan.thresholds.clone(),
        base_power: radio.base_power,
        beta: radio.beta,
    };
    let assign = AssignMessage {
        counts: plan.group_sizes.clone(),
        lambda: solution.lambda,
        at_ceiling: solution.status == Status::AtCeiling,
    };
    Ok((setup, assign))
}

/// Node-side reconstruction. A gain off the ladder means the node must ask
/// for a fresh setup, reported as [`Error::GainOutOfRange`].
pub fn node_apply(
    setup: &SetupMessage,
    assign: &AssignMessage,
    own_gain: f64,
) -> Result<NodeState> {
    if setup.thresholds.len() != assign.counts.len() + 1 {
        return Err(Error::Dimension {
            expected: setup.thresholds.len().saturating_sub(1),
            got: assign.counts.len(),
        });
    }
    let group = group_index(&setup.thresholds, own_gain)?;
    let tx_power = setup.base_power * setup.thresholds[group] / own_gain;
    let suffix = suffix_counts(&assign.counts)[group];
    if suffix == 0 {
        return domain(format!("broadcast counts leave group {} empty", group + 1));
    }
    let q = if assign.at_ceiling {
        1.0 / suffix as f64
    } else {
        stationary_prob(tx_power, suffix, assign.lambda)?
    };
    Ok(NodeState {
        gain: own_gain,
        group,
        tx_power,
        q,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{generate_disk_scenario, Scenario};
    use crate::solver::{solve_ucem, SolverOptions};

    fn solved(n: usize, seed: u64, frac: f64) -> (Scenario, GroupingPlan, Solution) {
        let s = generate_disk_scenario(n, 20.0, 1.0, RadioParams::default(), seed).unwrap();
        let p = GroupingPlan::build(&s).unwrap();
        let c = crate::analytics::utility_ceiling(&p).u_prime_max;
        let sol = solve_ucem(&p, c * frac, &SolverOptions::default()).unwrap();
        (s, p, sol)
    }

    #[test]
    fn broadcast_is_per_group() {
        let (s, p, sol) = solved(50, 1, 1.6);
        let (setup, assign) = bs_emit(&p, &sol, &s.radio).unwrap();
        assert_eq!(assign.counts, p.group_sizes);
        assert_eq!(assign.counts.len(), p.num_groups());
        assert!(assign.payload_scalars() < 50);
        assert_eq!(setup.payload_scalars(), p.num_groups() + 3);
    }

    #[test]
    fn single_node_broadcast() {
        let (s, p, sol) = solved(1, 3, 1.0 + 1e-6);
        let (_, assign) = bs_emit(&p, &sol, &s.radio).unwrap();
        assert_eq!(assign.counts, vec![1]);
        assert_eq!(assign.lambda, sol.lambda);
    }

    #[test]
    fn nodes_reproduce_central_solution() {
        let (s, p, sol) = solved(50, 4, 1.6);
        let (setup, assign) = bs_emit(&p, &sol, &s.radio).unwrap();
        for (j, node) in s.nodes.iter().enumerate() {
            let st = node_apply(&setup, &assign, node.gain).unwrap();
            assert_eq!(st.group, p.group_of[j]);
            assert!((st.tx_power - p.tx_power[j]).abs() <= 1e-15 * p.tx_power[j]);
            assert!((st.q - sol.q[j]).abs() <= 1e-12);
            assert_eq!(st, node_apply(&setup, &assign, node.gain).unwrap());
        }
    }

    #[test]
    fn boundary_node_gets_base_power() {
        let (s, p, sol) = solved(20, 6, 1.5);
        let (setup, assign) = bs_emit(&p, &sol, &s.radio).unwrap();
        let st = node_apply(&setup, &assign, setup.thresholds[0]).unwrap();
        assert_eq!(st.group, 0);
        assert_eq!(st.tx_power, s.radio.base_power);
        assert_eq!(
            st.q,
            stationary_prob(s.radio.base_power, 20, assign.lambda).unwrap()
        );
    }

    #[test]
    fn ceiling_flag_uses_inverse_suffix() {
        let (s, p, _) = solved(10, 2, 1.5);
        let c = crate::analytics::utility_ceiling(&p);
        let sol = solve_ucem(&p, c.u_prime_max, &SolverOptions::default()).unwrap();
        assert_eq!(sol.status, Status::AtCeiling);
        let (setup, assign) = bs_emit(&p, &sol, &s.radio).unwrap();
        assert!(assign.at_ceiling);
        for (j, node) in s.nodes.iter().enumerate() {
            let st = node_apply(&setup, &assign, node.gain).unwrap();
            assert_eq!(st.q, 1.0 / p.node_suffix(j) as f64);
            assert_eq!(st.q, sol.q[j]);
        }
    }

    #[test]
    fn off_ladder_gain_requests_setup() {
        let (s, p, sol) = solved(10, 2, 1.5);
        let (setup, assign) = bs_emit(&p, &sol, &s.radio).unwrap();
        let too_strong = setup.thresholds[0] * 1.01;
        assert!(matches!(
            node_apply(&setup, &assign, too_strong),
            Err(Error::GainOutOfRange { .. })
        ));
    }

    #[test]
    fn wire_form_keeps_full_precision() {
        let (s, p, sol) = solved(30, 8, 1.7);
        let (setup, assign) = bs_emit(&p, &sol, &s.radio).unwrap();
        let setup_json = setup.to_json();
        let assign_json = assign.to_json();
        let v: serde_json::Value = serde_json::from_str(&setup_json).unwrap();
        assert!(v.get("thresholds").is_some() && v.get("P").is_some() && v.get("beta").is_some());
        let v: serde_json::Value = serde_json::from_str(&assign_json).unwrap();
        assert!(
            v.get("counts").is_some() && v.get("lambda").is_some() && v.get("at_ceiling").is_some()
        );

        let setup2: SetupMessage = serde_json::from_str(&setup_json).unwrap();
        let assign2: AssignMessage = serde_json::from_str(&assign_json).unwrap();
        assert_eq!(setup2, setup);
        assert_eq!(assign2, assign);
        for (j, node) in s.nodes.iter().enumerate() {
            let st = node_apply(&setup2, &assign2, node.gain).unwrap();
            assert!((st.q - sol.q[j]).abs() <= 1e-12);
        }
    }
}
