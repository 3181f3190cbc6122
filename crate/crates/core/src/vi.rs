//! Value iteration, used as an independent check on the LP solution.
//!
//! Sweeps are synchronous: every backup reads only the previous iterate.

use std::ops::Deref;

use crate::error::Error;
use crate::model::CompiledModel;
use crate::state_space::Action;

/// Per-state values indexed by dense state index.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueVector(Vec<f64>);

impl ValueVector {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn sup_distance(&self, other: &[f64]) -> f64 {
        self.0.iter().zip(other).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

impl From<Vec<f64>> for ValueVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl Deref for ValueVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// `V'_i = max_a (q_i^a + β Σ_j p_ij^a V_j)`.
pub fn bellman_backup(model: &CompiledModel, values: &[f64]) -> ValueVector {
    ValueVector(
        (0..model.num_states())
            .map(|i| Action::ALL.iter().map(|&a| model.decision_value(values, i, a)).fold(f64::NEG_INFINITY, f64::max))
            .collect(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ViOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 100_000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViOutcome {
    pub values: ValueVector,
    pub iterations: usize,
    /// Sup-norm change of the last sweep.
    pub last_delta: f64,
}

/// Iterates from zero until successive iterates differ by less than `tol`
/// in sup-norm. With `β = 0` a single backup is exact and the loop stops
/// there.
pub fn value_iterate(model: &CompiledModel, opts: &ViOptions) -> Result<ViOutcome, Error> {
    let mut values = ValueVector::zeros(model.num_states());
    let mut last_delta = f64::INFINITY;
    for iteration in 1..=opts.max_iter {
        let next = bellman_backup(model, &values);
        last_delta = next.sup_distance(&values);
        values = next;
        if model.beta() == 0.0 || last_delta < opts.tol {
            return Ok(ViOutcome { values, iterations: iteration, last_delta });
        }
    }
    Err(Error::Solve(format!(
        "value iteration did not converge in {} iterations (last change {last_delta:e})",
        opts.max_iter
    )))
}
