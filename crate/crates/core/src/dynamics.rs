//! Transition function of the access control MDP.
//!
//! The probability of moving from `(e1, s1, q1)` to `(e2, s2, q2)` under an
//! action is the product of three independent factors:
//!
//! ```text
//! P = emergency[e1][e2] · access(s1, q1, a → s2) · request(q1, s2 → q2)
//! ```
//!
//! The access factor is deterministic: an allowed concrete request is added
//! to the granted set, anything else leaves the set unchanged. The request
//! factor depends on the [`RequestBehavior`] and is conditioned on the
//! post-decision set `s2`.

use std::fmt;
use std::str::FromStr;

use crate::error::Error;
use crate::state_space::{set_contains, set_insert, AccessSet, Action, Emergency, ModelDims, Request, State};

/// Absolute tolerance on probability mass.
pub const STOCHASTIC_TOL: f64 = 1e-9;

/// Row-stochastic 2×2 matrix of emergency status changes, indexed
/// `[from][to]` with calm = 0 and alert = 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmergencyMatrix {
    rows: [[f64; 2]; 2],
}

impl EmergencyMatrix {
    pub fn new(rows: [[f64; 2]; 2]) -> Result<Self, Error> {
        for e in Emergency::ALL {
            let row = rows[e.index()];
            let ok = row.iter().all(|p| p.is_finite() && (0.0..=1.0).contains(p))
                && (row[0] + row[1] - 1.0).abs() <= STOCHASTIC_TOL;
            if !ok {
                return Err(Error::NonStochastic { row: e, entries: row });
            }
        }
        Ok(Self { rows })
    }

    /// Skips validation; used to exercise [`validate_stochastic`] on broken input.
    pub fn new_unchecked(rows: [[f64; 2]; 2]) -> Self {
        Self { rows }
    }

    /// Status never changes.
    pub fn identity() -> Self {
        Self { rows: [[1.0, 0.0], [0.0, 1.0]] }
    }

    /// Calm turns to alert with probability `p`; alert is absorbing.
    pub fn with_alert_probability(p: f64) -> Result<Self, Error> {
        Self::new([[1.0 - p, p], [0.0, 1.0]])
    }

    pub fn prob(&self, from: Emergency, to: Emergency) -> f64 {
        self.rows[from.index()][to.index()]
    }

    pub fn rows(&self) -> [[f64; 2]; 2] {
        self.rows
    }
}

/// How the next pending request is generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RequestBehavior {
    /// A single request is controlled; the next request is always empty.
    Unique,
    /// Each access can be granted at most once. The next request is uniform
    /// over the accesses not yet granted plus the empty request, and the
    /// empty request is absorbing.
    Once,
    /// Every access is always requestable; the next request is uniform over
    /// all accesses and never empty.
    All,
}

impl RequestBehavior {
    pub const ALL: [RequestBehavior; 3] = [RequestBehavior::Unique, RequestBehavior::Once, RequestBehavior::All];

    pub fn label(self) -> &'static str {
        match self {
            RequestBehavior::Unique => "unique",
            RequestBehavior::Once => "once",
            RequestBehavior::All => "all",
        }
    }
}

impl fmt::Display for RequestBehavior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for RequestBehavior {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "unique" => Ok(RequestBehavior::Unique),
            "once" => Ok(RequestBehavior::Once),
            "all" => Ok(RequestBehavior::All),
            other => Err(format!("unknown request behavior `{other}` (expected unique, once or all)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionModel {
    pub dims: ModelDims,
    pub emergency: EmergencyMatrix,
    pub behavior: RequestBehavior,
}

impl TransitionModel {
    pub fn new(dims: ModelDims, emergency: EmergencyMatrix, behavior: RequestBehavior) -> Self {
        Self { dims, emergency, behavior }
    }

    pub fn successors(&self, s: &State, act: Action) -> Vec<(State, f64)> {
        successors(self, s, act)
    }
}

/// Deterministic access-set factor.
pub fn next_access_set(k: AccessSet, req: Request, act: Action, d: &ModelDims) -> AccessSet {
    match (act, req) {
        (Action::Allow, Request::Access(a)) => set_insert(k, a, d),
        _ => k,
    }
}

/// Distribution of the next pending request given the request just
/// controlled and the post-decision access set.
pub fn request_distribution(
    b: RequestBehavior,
    current: Request,
    k_next: AccessSet,
    d: &ModelDims,
) -> Vec<(Request, f64)> {
    match b {
        RequestBehavior::Unique => vec![(Request::Empty, 1.0)],
        RequestBehavior::All => {
            let p = 1.0 / d.num_accesses() as f64;
            d.accesses().map(|a| (Request::Access(a), p)).collect()
        }
        RequestBehavior::Once => {
            if current.is_empty() {
                return vec![(Request::Empty, 1.0)];
            }
            let mut out: Vec<(Request, f64)> =
                d.accesses().filter(|a| !set_contains(k_next, *a, d)).map(|a| (Request::Access(a), 0.0)).collect();
            out.push((Request::Empty, 0.0));
            let p = 1.0 / out.len() as f64;
            for entry in &mut out {
                entry.1 = p;
            }
            out
        }
    }
}

/// Sparse successor distribution of `(s, act)`; zero-probability entries are
/// omitted.
pub fn successors(m: &TransitionModel, s: &State, act: Action) -> Vec<(State, f64)> {
    let k_next = next_access_set(s.granted, s.request, act, &m.dims);
    let requests = request_distribution(m.behavior, s.request, k_next, &m.dims);
    let mut out = Vec::with_capacity(2 * requests.len());
    for e2 in Emergency::ALL {
        let pe = m.emergency.prob(s.emergency, e2);
        if pe == 0.0 {
            continue;
        }
        for &(req, pr) in &requests {
            out.push((State::new(e2, k_next, req), pe * pr));
        }
    }
    out
}

/// A state-action pair whose successor distribution is not stochastic.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticViolation {
    pub state: State,
    pub action: Action,
    pub total: f64,
}

/// Checks every state-action pair; collects all violations rather than
/// stopping at the first.
pub fn validate_stochastic(m: &TransitionModel) -> Result<(), Vec<StochasticViolation>> {
    let space = crate::state_space::StateSpace::new(m.dims);
    let mut violations = Vec::new();
    for s in space.states() {
        for act in Action::ALL {
            let succ = successors(m, &s, act);
            let total: f64 = succ.iter().map(|(_, p)| p).sum();
            let entries_ok = succ.iter().all(|(_, p)| *p > 0.0 && *p <= 1.0);
            if !entries_ok || (total - 1.0).abs() > STOCHASTIC_TOL {
                violations.push(StochasticViolation { state: s, action: act, total });
            }
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state_space::{Access, StateSpace};

    fn dims22() -> ModelDims {
        ModelDims::new(2, 2).unwrap()
    }

    fn acc(user: usize, resource: usize) -> Request {
        Request::Access(Access { user, resource })
    }

    fn alert_matrix() -> EmergencyMatrix {
        EmergencyMatrix::with_alert_probability(0.1).unwrap()
    }

    #[test]
    fn access_set_factor() {
        let d = dims22();
        assert_eq!(next_access_set(AccessSet(0), acc(0, 0), Action::Allow, &d), AccessSet(1));
        assert_eq!(next_access_set(AccessSet(0), acc(0, 0), Action::Deny, &d), AccessSet(0));
        assert_eq!(next_access_set(AccessSet(3), Request::Empty, Action::Allow, &d), AccessSet(3));
    }

    #[test]
    fn unique_requests_are_empty() {
        let d = dims22();
        for k in 0..16 {
            assert_eq!(
                request_distribution(RequestBehavior::Unique, acc(0, 1), AccessSet(k), &d),
                vec![(Request::Empty, 1.0)]
            );
        }
    }

    #[test]
    fn all_requests_are_uniform_over_accesses() {
        let d = dims22();
        let dist = request_distribution(RequestBehavior::All, acc(0, 0), AccessSet(0), &d);
        assert_eq!(dist.len(), 4);
        assert!(dist.iter().all(|(r, p)| !r.is_empty() && *p == 0.25));
    }

    #[test]
    fn once_requests_exclude_granted_accesses() {
        let d = dims22();
        // Only (1,1) granted: three remaining accesses plus the empty request.
        let dist = request_distribution(RequestBehavior::Once, acc(1, 1), AccessSet(8), &d);
        assert_eq!(dist, vec![(acc(0, 0), 0.25), (acc(0, 1), 0.25), (acc(1, 0), 0.25), (Request::Empty, 0.25)]);
        let full = request_distribution(RequestBehavior::Once, acc(1, 1), AccessSet(15), &d);
        assert_eq!(full, vec![(Request::Empty, 1.0)]);
        let absorbed = request_distribution(RequestBehavior::Once, Request::Empty, AccessSet(0), &d);
        assert_eq!(absorbed, vec![(Request::Empty, 1.0)]);
    }

    #[test]
    fn deterministic_successor() {
        let m = TransitionModel::new(dims22(), EmergencyMatrix::identity(), RequestBehavior::Unique);
        let s = State::new(Emergency::Calm, AccessSet(0), acc(0, 0));
        assert_eq!(
            successors(&m, &s, Action::Allow),
            vec![(State::new(Emergency::Calm, AccessSet(1), Request::Empty), 1.0)]
        );
    }

    #[test]
    fn emergency_factor_splits_mass() {
        let m = TransitionModel::new(dims22(), alert_matrix(), RequestBehavior::Unique);
        let s = State::new(Emergency::Calm, AccessSet(0), acc(0, 0));
        let succ = successors(&m, &s, Action::Deny);
        assert_eq!(succ.len(), 2);
        assert_eq!(succ[0].0, State::new(Emergency::Calm, AccessSet(0), Request::Empty));
        assert!((succ[0].1 - 0.9).abs() < 1e-15);
        assert_eq!(succ[1].0, State::new(Emergency::Alert, AccessSet(0), Request::Empty));
        assert!((succ[1].1 - 0.1).abs() < 1e-15);
    }

    #[test]
    fn product_of_factors_under_all() {
        let m = TransitionModel::new(dims22(), alert_matrix(), RequestBehavior::All);
        let s = State::new(Emergency::Calm, AccessSet(0), acc(0, 1));
        let succ = successors(&m, &s, Action::Allow);
        assert_eq!(succ.len(), 8);
        let calm = succ.iter().filter(|(t, p)| t.emergency == Emergency::Calm && (p - 0.225).abs() < 1e-12);
        let alert = succ.iter().filter(|(t, p)| t.emergency == Emergency::Alert && (p - 0.025).abs() < 1e-12);
        assert_eq!(calm.count(), 4);
        assert_eq!(alert.count(), 4);
        assert!(succ.iter().all(|(t, _)| t.granted == AccessSet(2)));
    }

    #[test]
    fn exhaustive_stochasticity() {
        for b in RequestBehavior::ALL {
            for matrix in [EmergencyMatrix::identity(), alert_matrix()] {
                let m = TransitionModel::new(dims22(), matrix, b);
                assert_eq!(validate_stochastic(&m), Ok(()));
            }
        }
    }

    #[test]
    fn broken_row_is_reported_everywhere() {
        let m = TransitionModel::new(
            dims22(),
            EmergencyMatrix::new_unchecked([[0.7, 0.1], [0.0, 1.0]]),
            RequestBehavior::Unique,
        );
        let v = validate_stochastic(&m).unwrap_err();
        // Every calm state, both actions.
        assert_eq!(v.len(), 80 * 2);
        assert!(v.iter().all(|x| x.state.emergency == Emergency::Calm && (x.total - 0.8).abs() < 1e-12));
    }

    #[test]
    fn matrix_validation() {
        assert!(EmergencyMatrix::new([[0.9, 0.1], [0.0, 1.0]]).is_ok());
        assert!(EmergencyMatrix::new([[0.7, 0.1], [0.0, 1.0]]).is_err());
        assert!(EmergencyMatrix::with_alert_probability(1.2).is_err());
    }

    #[test]
    fn request_marginals_match_behavior() {
        let d = dims22();
        let space = StateSpace::new(d);
        for b in RequestBehavior::ALL {
            let m = TransitionModel::new(d, alert_matrix(), b);
            for s in space.states() {
                for act in Action::ALL {
                    let succ = successors(&m, &s, act);
                    let k_next = next_access_set(s.granted, s.request, act, &d);
                    assert!(succ.iter().all(|(t, p)| t.granted == k_next && *p > 0.0));
                    match b {
                        RequestBehavior::Unique => assert!(succ.iter().all(|(t, _)| t.request.is_empty())),
                        RequestBehavior::All => assert!(succ.iter().all(|(t, _)| !t.request.is_empty())),
                        RequestBehavior::Once => {
                            if s.request.is_empty() || k_next == d.full_set() {
                                assert!(succ.iter().all(|(t, _)| t.request.is_empty()));
                            }
                            assert!(succ
                                .iter()
                                .filter_map(|(t, _)| t.request.access())
                                .all(|a| !set_contains(k_next, a, &d)));
                        }
                    }
                }
            }
        }
    }
}
