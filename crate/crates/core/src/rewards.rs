//! Reward function of the access control MDP.
//!
//! A transition earns the access reward when a concrete request is allowed,
//! plus the emergency penalty of the reached state: while in alert, every
//! resource that no user has been granted contributes its
//! `reward_resource` entry.
//!
//! Two variants differ only for states whose pending request is empty:
//! [`RewardVariant::EpsZero`] makes the whole transition worthless, while
//! [`RewardVariant::EpsAccrues`] still charges the emergency penalty.

use std::fmt;
use std::str::FromStr;

use crate::dynamics::{successors, TransitionModel};
use crate::scenario::Scenario;
use crate::state_space::{
    access_bit_index, set_contains, Access, AccessSet, Action, Emergency, ModelDims, Request, State,
};

/// Access and resource reward tables, indexed by access bit index and
/// resource index respectively.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardTables {
    reward_access: Vec<f64>,
    reward_resource: Vec<f64>,
}

impl RewardTables {
    /// `reward_access` is in access bit order (user-major).
    ///
    /// Panics if the lengths disagree with `dims`.
    pub fn new(dims: &ModelDims, reward_access: Vec<f64>, reward_resource: Vec<f64>) -> Self {
        assert_eq!(reward_access.len(), dims.num_accesses(), "reward_access must be total");
        assert_eq!(reward_resource.len(), dims.num_resources(), "reward_resource must be total");
        Self { reward_access, reward_resource }
    }

    pub fn access(&self, a: Access, d: &ModelDims) -> f64 {
        self.reward_access[access_bit_index(a, d)]
    }

    pub fn resource(&self, r: usize) -> f64 {
        self.reward_resource[r]
    }

    pub fn access_rewards(&self) -> &[f64] {
        &self.reward_access
    }

    pub fn resource_rewards(&self) -> &[f64] {
        &self.reward_resource
    }

    /// Multiplies every entry by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            reward_access: self.reward_access.iter().map(|x| x * c).collect(),
            reward_resource: self.reward_resource.iter().map(|x| x * c).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.reward_access.iter().chain(&self.reward_resource).all(|x| x.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RewardVariant {
    /// Transitions out of an empty-request state earn nothing.
    EpsZero,
    /// Empty-request states still pay the emergency penalty of the reached state.
    EpsAccrues,
}

impl RewardVariant {
    pub fn label(self) -> &'static str {
        match self {
            RewardVariant::EpsZero => "eps_zero",
            RewardVariant::EpsAccrues => "eps_accrues",
        }
    }
}

impl fmt::Display for RewardVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for RewardVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "eps_zero" => Ok(RewardVariant::EpsZero),
            "eps_accrues" => Ok(RewardVariant::EpsAccrues),
            other => Err(format!("unknown reward variant `{other}` (expected eps_zero or eps_accrues)")),
        }
    }
}

/// Emergency penalty of being in `(e, k)`.
pub fn reward_emresource(sc: &Scenario, e: Emergency, k: AccessSet) -> f64 {
    if e == Emergency::Calm {
        return 0.0;
    }
    let d = &sc.dims;
    (0..d.num_resources())
        .filter(|&resource| (0..d.num_users()).all(|user| !set_contains(k, Access { user, resource }, d)))
        .map(|r| sc.rewards.resource(r))
        .sum()
}

/// Reward `w` of the transition `s --act--> s2`.
pub fn reward_transition(sc: &Scenario, s: &State, act: Action, s2: &State) -> f64 {
    let access_part = match (act, s.request) {
        (Action::Allow, Request::Access(a)) => sc.rewards.access(a, &sc.dims),
        _ => 0.0,
    };
    match (sc.variant, s.request) {
        (RewardVariant::EpsZero, Request::Empty) => 0.0,
        _ => access_part + reward_emresource(sc, s2.emergency, s2.granted),
    }
}

/// Expected one-step reward `q = Σ_j p_ij · w_ij`.
pub fn immediate_reward(sc: &Scenario, m: &TransitionModel, s: &State, act: Action) -> f64 {
    successors(m, s, act).iter().map(|(s2, p)| p * reward_transition(sc, s, act, s2)).sum()
}
