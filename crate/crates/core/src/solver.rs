//! Exact solution of the utility-constrained energy minimization problem.
//!
//! Minimizing `Σ P_j q_j` subject to `Σ φ_j(q_j) ≥ U'_c` is convex, and the
//! Lagrangian separates per node. For a multiplier `λ`, each node's
//! stationarity condition is the quadratic
//!
//! ```text
//! P q² − (P + λ S) q + λ = 0
//! ```
//!
//! whose smaller root lies in `[0, 1/S]` and grows with `λ`. The utility of
//! the resulting vector is nondecreasing in `λ`, so a scalar bisection on
//! `λ` finds the multiplier at which the utility floor binds.

use serde::{Deserialize, Serialize};

use crate::analytics::{average_power, phi, utility_ceiling, utility_prime};
use crate::error::{domain, Error, Result};
use crate::grouping::GroupingPlan;

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// Utility tolerance relative to `|U'_c|`.
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_bisection: usize,
    /// Bracket doublings before giving up; 2^2100 overflows long before.
    pub max_doubling: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            max_bisection: 200,
            max_doubling: 2100,
        }
    }
}

impl SolverOptions {
    pub fn tolerance(&self, u_prime_c: f64) -> f64 {
        self.rel_tol * u_prime_c.abs() + self.abs_tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    /// The utility floor binds at a finite multiplier.
    Optimal,
    /// The floor equals the utility ceiling; `q = 1/S` and `λ` is only a
    /// finite stand-in for the infinite multiplier.
    AtCeiling,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Solution {
    pub lambda: f64,
    pub status: Status,
    #[serde(rename = "U_prime")]
    pub u_prime: f64,
    pub avg_power_watts: f64,
    pub kkt_residual: f64,
    pub q: Vec<f64>,
    #[serde(default)]
    pub iterations: usize,
}

/// Smaller root of `P q² − (P + λ S) q + λ = 0`.
///
/// Uses `q = 2λ / (b + √(b² − 4Pλ))` with `b = P + λS`, which avoids the
/// cancellation of the textbook form. For `S = 1` the root is
/// `min(λ/P, 1)`. An infinite `λ` returns the limit `1/S`.
pub fn stationary_prob(power: f64, suffix: usize, lambda: f64) -> Result<f64> {
    if lambda.is_nan() || lambda < 0.0 {
        return domain(format!("multiplier must be >= 0, got {lambda}"));
    }
    if !(power > 0.0 && power.is_finite()) {
        return domain(format!("power must be positive, got {power}"));
    }
    if suffix == 0 {
        return domain("suffix count must be at least 1");
    }
    if lambda == f64::INFINITY {
        return Ok(1.0 / suffix as f64);
    }
    if suffix == 1 {
        return Ok((lambda / power).min(1.0));
    }
    let b = power + lambda * suffix as f64;
    let disc = (b * b - 4.0 * power * lambda).max(0.0);
    Ok((2.0 * lambda / (b + disc.sqrt())).min(1.0))
}

/// Probability vector induced by `lambda`.
pub fn probs_for_lambda(plan: &GroupingPlan, lambda: f64) -> Result<Vec<f64>> {
    plan.tx_power
        .iter()
        .zip(&plan.group_of)
        .map(|(&p, &g)| stationary_prob(p, plan.suffix_count[g], lambda))
        .collect()
}

fn check_target(u_prime_c: f64) -> Result<()> {
    if !u_prime_c.is_finite() {
        return domain(format!("utility floor must be finite, got {u_prime_c}"));
    }
    Ok(())
}

/// Minimum-energy probabilities meeting `U' ≥ u_prime_c`.
pub fn solve_ucem(plan: &GroupingPlan, u_prime_c: f64, opts: &SolverOptions) -> Result<Solution> {
    check_target(u_prime_c)?;
    let ceiling = utility_ceiling(plan);
    let tol = opts.tolerance(u_prime_c);
    if u_prime_c > ceiling.u_prime_max + tol {
        return Err(Error::Infeasible {
            u_prime_c,
            u_prime_max: ceiling.u_prime_max,
        });
    }

    let utility_at =
        |lambda: f64| -> Result<f64> { utility_prime(&probs_for_lambda(plan, lambda)?, plan) };
    let p_min = plan.tx_power.iter().copied().fold(f64::INFINITY, f64::min);
    let at_ceiling = u_prime_c >= ceiling.u_prime_max - tol;
    let target = if at_ceiling {
        ceiling.u_prime_max - tol
    } else {
        u_prime_c
    };

    let mut hi = 1e-12 * p_min;
    let mut lo = 0.0;
    let mut doublings = 0;
    loop {
        if utility_at(hi)? >= target {
            break;
        }
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > opts.max_doubling || !hi.is_finite() {
            return Err(Error::NonConvergence {
                iterations: doublings,
                lambda: lo,
                residual: target - utility_at(lo)?,
            });
        }
    }

    if at_ceiling {
        return finish(
            plan,
            ceiling.q_star,
            hi,
            Status::AtCeiling,
            u_prime_c,
            doublings,
        );
    }

    let mut last = (hi, f64::INFINITY);
    for it in 1..=opts.max_bisection {
        let mid = 0.5 * (lo + hi);
        let u = utility_at(mid)?;
        let r = u - u_prime_c;
        last = (mid, r);
        if r.abs() <= tol {
            let q = probs_for_lambda(plan, mid)?;
            return finish(plan, q, mid, Status::Optimal, u_prime_c, doublings + it);
        }
        if mid <= lo || mid >= hi {
            break;
        }
        if r < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NonConvergence {
        iterations: opts.max_bisection,
        lambda: last.0,
        residual: last.1,
    })
}

fn finish(
    plan: &GroupingPlan,
    q: Vec<f64>,
    lambda: f64,
    status: Status,
    u_prime_c: f64,
    iterations: usize,
) -> Result<Solution> {
    let u_prime = utility_prime(&q, plan)?;
    let avg_power_watts = average_power(&q, &plan.tx_power)?;
    let mut sol = Solution {
        lambda,
        status,
        u_prime,
        avg_power_watts,
        kkt_residual: 0.0,
        q,
        iterations,
    };
    sol.kkt_residual = kkt_residual(&sol.q, sol.lambda, plan, u_prime_c)?;
    Ok(sol)
}

/// Largest of the scaled per-node stationarity residuals
/// `|P q² − (P + λS) q + λ| / P` and the utility residual `|U'(q) − U'_c|`.
pub fn kkt_residual(q: &[f64], lambda: f64, plan: &GroupingPlan, u_prime_c: f64) -> Result<f64> {
    let mut worst = stationarity_residual(q, lambda, plan)?;
    let u = utility_prime(q, plan)?;
    let ur = (u - u_prime_c).abs();
    worst = worst.max(if ur.is_nan() { f64::INFINITY } else { ur });
    Ok(worst)
}

/// Per-node stationarity part of [`kkt_residual`].
pub fn stationarity_residual(q: &[f64], lambda: f64, plan: &GroupingPlan) -> Result<f64> {
    if q.len() != plan.num_nodes() {
        return Err(Error::Dimension {
            expected: plan.num_nodes(),
            got: q.len(),
        });
    }
    Ok(q.iter()
        .zip(&plan.tx_power)
        .zip(&plan.group_of)
        .map(|((&q, &p), &g)| {
            let s = plan.suffix_count[g] as f64;
            (q * q * p - q * (p + lambda * s) + lambda).abs() / p
        })
        .fold(0.0, f64::max))
}

/// Baseline where every node uses one common probability.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UniformSolution {
    pub q: f64,
    #[serde(rename = "U_prime")]
    pub u_prime: f64,
    pub avg_power_watts: f64,
}

impl UniformSolution {
    pub fn probs(&self, n: usize) -> Vec<f64> {
        vec![self.q; n]
    }
}

/// Utility of the common probability `q`, and the probability maximizing it.
fn uniform_peak(plan: &GroupingPlan) -> f64 {
    let n = plan.num_nodes() as f64;
    let c: f64 = plan.node_suffixes().iter().map(|&s| (s - 1) as f64).sum();
    n / (n + c)
}

/// Smallest common probability whose utility reaches `u_prime_c`.
///
/// The common-probability utility `N ln q + C ln(1 − q)` is concave with an
/// interior peak at `N / (N + C)`; energy grows with `q`, so the root on the
/// rising side is the cheapest.
pub fn solve_uniform(
    plan: &GroupingPlan,
    u_prime_c: f64,
    opts: &SolverOptions,
) -> Result<UniformSolution> {
    check_target(u_prime_c)?;
    let n = plan.num_nodes();
    let utility_at = |q: f64| utility_prime(&vec![q; n], plan);
    let tol = opts.tolerance(u_prime_c);
    let peak = uniform_peak(plan);
    let u_peak = utility_at(peak)?;
    if u_prime_c > u_peak + tol {
        return Err(Error::UniformInfeasible {
            u_prime_c,
            u_prime_max: u_peak,
        });
    }
    let done = |q: f64, u: f64| -> Result<UniformSolution> {
        Ok(UniformSolution {
            q,
            u_prime: u,
            avg_power_watts: average_power(&vec![q; n], &plan.tx_power)?,
        })
    };
    if u_prime_c >= u_peak - tol {
        return done(peak, u_peak);
    }
    let (mut lo, mut hi) = (0.0, peak);
    let mut last = (peak, f64::INFINITY);
    for _ in 0..opts.max_bisection {
        let mid = 0.5 * (lo + hi);
        let u = utility_at(mid)?;
        let r = u - u_prime_c;
        last = (mid, r);
        if r.abs() <= tol {
            return done(mid, u);
        }
        if mid <= lo || mid >= hi {
            break;
        }
        if r < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NonConvergence {
        iterations: opts.max_bisection,
        lambda: last.0,
        residual: last.1,
    })
}

/// Best point found by [`grid_oracle`].
#[derive(Debug, Clone)]
pub struct OraclePoint {
    pub q: Vec<f64>,
    pub energy: f64,
    pub u_prime: f64,
}

pub const GRID_ORACLE_MAX_NODES: usize = 4;

/// Exhaustive search over `q ∈ {step, 2·step, …, 1 − step}^N` for the
/// lowest-power point with `U' ≥ u_prime_c`. Intended as a test oracle.
///
/// Branches whose partial power already exceeds the incumbent, or whose
/// utility cannot reach the floor even at every remaining node's best grid
/// value, are skipped; the result equals that of full enumeration.
pub fn grid_oracle(plan: &GroupingPlan, u_prime_c: f64, step: f64) -> Result<OraclePoint> {
    let n = plan.num_nodes();
    if n > GRID_ORACLE_MAX_NODES {
        return Err(Error::TooManyNodes {
            max: GRID_ORACLE_MAX_NODES,
            got: n,
        });
    }
    if !(step > 0.0 && step < 0.5) {
        return domain(format!("grid step must be in (0, 0.5), got {step}"));
    }
    let k = ((1.0 / step).round() as usize).saturating_sub(1);
    let grid: Vec<f64> = (1..=k).map(|i| i as f64 * step).collect();

    let phis: Vec<Vec<f64>> = plan
        .node_suffixes()
        .iter()
        .map(|&s| grid.iter().map(|&q| phi(q, s)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let best_phi: Vec<f64> = phis
        .iter()
        .map(|t| t.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    // best achievable utility from node j onward
    let mut tail_best = vec![0.0; n + 1];
    for j in (0..n).rev() {
        tail_best[j] = tail_best[j + 1] + best_phi[j];
    }

    struct Search<'a> {
        grid: &'a [f64],
        phis: &'a [Vec<f64>],
        power: &'a [f64],
        tail_best: &'a [f64],
        target: f64,
        idx: Vec<usize>,
        best: Option<(f64, f64, Vec<usize>)>,
    }

    impl Search<'_> {
        fn incumbent(&self) -> f64 {
            self.best.as_ref().map_or(f64::INFINITY, |b| b.0)
        }

        fn visit(&mut self, j: usize, energy: f64, util: f64) {
            let n = self.power.len();
            if j == n {
                if util >= self.target && energy < self.incumbent() {
                    self.best = Some((energy, util, self.idx.clone()));
                }
                return;
            }
            for (t, &q) in self.grid.iter().enumerate() {
                let e = energy + self.power[j] * q;
                // power grows with q along the grid
                if e >= self.incumbent() {
                    break;
                }
                let u = util + self.phis[j][t];
                if u + self.tail_best[j + 1] < self.target {
                    continue;
                }
                self.idx[j] = t;
                self.visit(j + 1, e, u);
            }
        }
    }

    let mut search = Search {
        grid: &grid,
        phis: &phis,
        power: &plan.tx_power,
        tail_best: &tail_best,
        target: u_prime_c,
        idx: vec![0; n],
        best: None,
    };
    search.visit(0, 0.0, 0.0);
    match search.best {
        Some((energy, u_prime, idx)) => Ok(OraclePoint {
            q: idx.iter().map(|&t| grid[t]).collect(),
            energy,
            u_prime,
        }),
        None => Err(Error::NoFeasiblePoint),
    }
}
