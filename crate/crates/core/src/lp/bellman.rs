//! Bellman optimality as a linear program.
//!
//! The max in `V_i = max_a [q_i^a + β Σ_j p_ij^a V_j]` is not linear, so every
//! action contributes a lower bound instead:
//!
//! ```text
//! minimize   Σ_i V_i
//! subject to V_i − β Σ_j p_ij^a V_j ≥ q_i^a     for every state i and action a
//! ```
//!
//! The smallest vector satisfying all bounds is the optimal value function.

use crate::model::CompiledModel;
use crate::state_space::Action;

use super::simplex::{Constraint, LinearProgram, Relation};

/// One constraint per (state, action), state-major with deny before allow.
pub fn build_bellman_lp(model: &CompiledModel) -> LinearProgram {
    let n = model.num_states();
    let beta = model.beta();
    let mut lp = LinearProgram::new(vec![1.0; n]);
    lp.constraints.reserve(2 * n);
    for i in 0..n {
        for act in Action::ALL {
            let mut self_coeff = 1.0;
            let mut coeffs = vec![(i, 0.0)];
            for &(j, p) in model.successors(i, act) {
                if j == i {
                    self_coeff -= beta * p;
                } else if beta != 0.0 {
                    match coeffs.iter_mut().find(|(k, _)| *k == j) {
                        Some(entry) => entry.1 -= beta * p,
                        None => coeffs.push((j, -beta * p)),
                    }
                }
            }
            coeffs[0].1 = self_coeff;
            lp.add(Constraint::new(coeffs, Relation::Ge, model.reward(i, act)));
        }
    }
    lp
}

/// Slack of every Bellman constraint at a candidate value vector.
#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    /// Largest amount by which any constraint is violated.
    pub max_violation: f64,
    /// Per state, the smallest slack `V_i − DV(i, a)` over actions. Zero means
    /// `V_i` equals the Bellman max.
    pub min_slack: Vec<f64>,
}

impl VerificationReport {
    pub fn feasible(&self, tol: f64) -> bool {
        self.max_violation <= tol
    }

    /// States with no constraint tight within `tol`.
    pub fn loose_states(&self, tol: f64) -> Vec<usize> {
        self.min_slack.iter().enumerate().filter(|(_, s)| s.abs() > tol).map(|(i, _)| i).collect()
    }

    pub fn all_tight(&self, tol: f64) -> bool {
        self.min_slack.iter().all(|s| s.abs() <= tol)
    }

    pub fn max_abs_slack(&self) -> f64 {
        self.min_slack.iter().fold(0.0, |m, s| m.max(s.abs()))
    }
}

pub fn verify_solution(model: &CompiledModel, values: &[f64]) -> VerificationReport {
    assert_eq!(values.len(), model.num_states(), "one value per state");
    let mut max_violation: f64 = 0.0;
    let min_slack = (0..model.num_states())
        .map(|i| {
            Action::ALL
                .iter()
                .map(|&act| {
                    let slack = values[i] - model.decision_value(values, i, act);
                    if -slack > max_violation {
                        max_violation = -slack;
                    }
                    slack
                })
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    VerificationReport { max_violation, min_slack }
}
