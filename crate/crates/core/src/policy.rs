//! Decision values and policy extraction.
//!
//! The decision value of an action is its immediate reward plus the
//! discounted expected optimal value of the successors:
//!
//! ```text
//! DV(σ_i, a) = q_i^a + β Σ_j p_ij^a V*(σ_j)
//! ```
//!
//! The policy picks the action with the larger decision value; the absolute
//! difference between the two is reported as the confidence gap.

use crate::dynamics::{successors, TransitionModel};
use crate::model::CompiledModel;
use crate::rewards::immediate_reward;
use crate::scenario::Scenario;
use crate::state_space::{Action, State, StateSpace};
use crate::vi::ValueVector;

/// Decision values closer than this are a tie, resolved to deny.
pub const TIE_TOL: f64 = 1e-9;

/// Decision value computed straight from the scenario definition, without
/// going through a [`CompiledModel`].
pub fn decision_value(sc: &Scenario, m: &TransitionModel, values: &[f64], s: &State, act: Action) -> f64 {
    let space = StateSpace::new(m.dims);
    let future: f64 = successors(m, s, act).iter().map(|(s2, p)| p * values[space.state_index(s2)]).sum();
    immediate_reward(sc, m, s, act) + sc.beta * future
}

/// Chosen action and confidence gap for a pair of decision values.
pub fn choose(dv_deny: f64, dv_allow: f64) -> (Action, f64) {
    let action = if dv_allow > dv_deny + TIE_TOL { Action::Allow } else { Action::Deny };
    (action, (dv_allow - dv_deny).abs())
}

/// `DV(state, action)` for every pair, indexed by dense state index.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionValueTable {
    values: Vec<[f64; 2]>,
}

impl DecisionValueTable {
    pub fn compute(model: &CompiledModel, values: &[f64]) -> Self {
        Self {
            values: (0..model.num_states()).map(|i| Action::ALL.map(|a| model.decision_value(values, i, a))).collect(),
        }
    }

    pub fn from_rows(values: Vec<[f64; 2]>) -> Self {
        Self { values }
    }

    pub fn get(&self, i: usize, act: Action) -> f64 {
        self.values[i][act.index()]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyMap {
    actions: Vec<Action>,
    gaps: Vec<f64>,
}

impl PolicyMap {
    pub fn from_decisions(table: &DecisionValueTable) -> Self {
        let (actions, gaps) =
            (0..table.len()).map(|i| choose(table.get(i, Action::Deny), table.get(i, Action::Allow))).unzip();
        Self { actions, gaps }
    }

    pub fn action(&self, i: usize) -> Action {
        self.actions[i]
    }

    pub fn gap(&self, i: usize) -> f64 {
        self.gaps[i]
    }

    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

pub fn extract_policy(model: &CompiledModel, values: &[f64]) -> PolicyMap {
    PolicyMap::from_decisions(&DecisionValueTable::compute(model, values))
}

/// A solved scenario: optimal values, decision values and policy.
#[derive(Debug, Clone)]
pub struct Solution {
    pub scenario: Scenario,
    pub values: ValueVector,
    pub decisions: DecisionValueTable,
    pub policy: PolicyMap,
}

/// Answer to a single query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub action: Action,
    pub dv_deny: f64,
    pub dv_allow: f64,
    pub gap: f64,
    pub value: f64,
}

impl Solution {
    pub fn new(scenario: Scenario, model: &CompiledModel, values: ValueVector) -> Self {
        let decisions = DecisionValueTable::compute(model, &values);
        let policy = PolicyMap::from_decisions(&decisions);
        Self { scenario, values, decisions, policy }
    }

    pub fn decide(&self, s: &State) -> Decision {
        let i = self.scenario.state_space().state_index(s);
        Decision {
            action: self.policy.action(i),
            dv_deny: self.decisions.get(i, Action::Deny),
            dv_allow: self.decisions.get(i, Action::Allow),
            gap: self.policy.gap(i),
            value: self.values[i],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::builtin_scenario;
    use crate::state_space::{AccessSet, Emergency, Request};
    use crate::vi::{value_iterate, ViOptions};

    fn solved(name: &str) -> (Scenario, CompiledModel, ValueVector) {
        let sc = builtin_scenario(name).unwrap();
        let model = CompiledModel::build(&sc);
        let v = value_iterate(&model, &ViOptions::default()).unwrap().values;
        (sc, model, v)
    }

    fn query(sc: &Scenario, e: Emergency, user: &str, resource: &str) -> State {
        State::new(e, AccessSet(0), Request::Access(sc.access_by_name(user, resource).unwrap()))
    }

    #[test]
    fn table1_alert_alice_low() {
        let (sc, _, v) = solved("table1");
        let m = sc.transition_model();
        let s = query(&sc, Emergency::Alert, "alice", "low");
        assert_eq!(decision_value(&sc, &m, &v, &s, Action::Deny), -20.0);
        assert_eq!(decision_value(&sc, &m, &v, &s, Action::Allow), -14.0);
    }

    #[test]
    fn table2_all_alert_alice_high() {
        let (sc, _, v) = solved("table2_all");
        let m = sc.transition_model();
        let s = query(&sc, Emergency::Alert, "alice", "high");
        assert!((decision_value(&sc, &m, &v, &s, Action::Allow) - 55.0).abs() < 1e-6);
    }

    #[test]
    fn direct_and_compiled_routes_agree() {
        for name in ["table2_once", "modified_once", "table2_all"] {
            let (sc, model, v) = solved(name);
            let m = sc.transition_model();
            let table = DecisionValueTable::compute(&model, &v);
            for (i, s) in sc.state_space().states().enumerate() {
                for act in Action::ALL {
                    let direct = decision_value(&sc, &m, &v, &s, act);
                    assert!((direct - table.get(i, act)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn extracted_actions() {
        let (sc, model, v) = solved("table1");
        let policy = extract_policy(&model, &v);
        let i = model.space().state_index(&query(&sc, Emergency::Calm, "bob", "high"));
        assert_eq!(policy.action(i), Action::Deny);
        assert_eq!(policy.gap(i), 10.0);

        let (sc, model, v) = solved("table2_all");
        let policy = extract_policy(&model, &v);
        let i = model.space().state_index(&query(&sc, Emergency::Calm, "bob", "high"));
        assert_eq!(policy.action(i), Action::Allow);
    }

    #[test]
    fn zero_rewards_deny_everywhere() {
        let mut sc = builtin_scenario("table2_once").unwrap();
        sc.rewards = sc.rewards.scaled(0.0);
        let model = CompiledModel::build(&sc);
        let v = value_iterate(&model, &ViOptions::default()).unwrap().values;
        let policy = extract_policy(&model, &v);
        assert!(policy.actions().iter().all(|&a| a == Action::Deny));
    }

    #[test]
    fn zero_discount_decision_values_are_immediate_rewards() {
        let (_, model, v) = solved("table1");
        let table = DecisionValueTable::compute(&model, &v);
        for i in 0..model.num_states() {
            for act in Action::ALL {
                assert_eq!(table.get(i, act), model.reward(i, act));
            }
        }
    }

    #[test]
    fn best_decision_value_is_the_state_value() {
        for name in ["table2_unique", "table2_once", "modified_all"] {
            let (_, model, v) = solved(name);
            let table = DecisionValueTable::compute(&model, &v);
            for i in 0..model.num_states() {
                let best = table.get(i, Action::Deny).max(table.get(i, Action::Allow));
                assert!((best - v[i]).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn ties_go_to_deny() {
        let (action, gap) = choose(1.0, 1.0 + 1e-10);
        assert_eq!(action, Action::Deny);
        assert!(gap < TIE_TOL);
        assert_eq!(choose(1.0, 2.0).0, Action::Allow);
        assert_eq!(choose(2.0, 1.0), (Action::Deny, 1.0));
    }
}
