//! Tabulated form of a scenario: per state-action immediate rewards and
//! sparse successor lists over dense state indices. Both solvers and the
//! policy module work from this table.

use crate::dynamics::successors;
use crate::rewards::immediate_reward;
use crate::scenario::Scenario;
use crate::state_space::{Action, StateSpace};

#[derive(Debug, Clone)]
pub struct CompiledModel {
    space: StateSpace,
    beta: f64,
    /// `q[i][a]`, action in canonical order.
    rewards: Vec<[f64; 2]>,
    transitions: Vec<[Vec<(usize, f64)>; 2]>,
}

impl CompiledModel {
    pub fn build(sc: &Scenario) -> Self {
        let m = sc.transition_model();
        let space = sc.state_space();
        let mut rewards = Vec::with_capacity(space.len());
        let mut transitions = Vec::with_capacity(space.len());
        for s in space.states() {
            let mut q = [0.0; 2];
            let mut t: [Vec<(usize, f64)>; 2] = Default::default();
            for act in Action::ALL {
                q[act.index()] = immediate_reward(sc, &m, &s, act);
                t[act.index()] =
                    successors(&m, &s, act).into_iter().map(|(s2, p)| (space.state_index(&s2), p)).collect();
            }
            rewards.push(q);
            transitions.push(t);
        }
        Self { space, beta: sc.beta, rewards, transitions }
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn num_states(&self) -> usize {
        self.rewards.len()
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn reward(&self, i: usize, act: Action) -> f64 {
        self.rewards[i][act.index()]
    }

    pub fn successors(&self, i: usize, act: Action) -> &[(usize, f64)] {
        &self.transitions[i][act.index()]
    }

    /// `q + β · Σ p · V(successor)`.
    pub fn decision_value(&self, values: &[f64], i: usize, act: Action) -> f64 {
        let future: f64 = self.successors(i, act).iter().map(|&(j, p)| p * values[j]).sum();
        self.reward(i, act) + self.beta * future
    }

    /// Adds `c` to every transition reward, which shifts every `q` by `c`.
    pub fn shift_rewards(&mut self, c: f64) {
        for q in &mut self.rewards {
            q[0] += c;
            q[1] += c;
        }
    }
}
