//! Complete parameterization of an access control MDP.

use sha2::{Digest, Sha256};

use crate::dynamics::{EmergencyMatrix, RequestBehavior, TransitionModel};
use crate::error::Error;
use crate::rewards::{RewardTables, RewardVariant};
use crate::state_space::{Access, ModelDims, Request, StateSpace};

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub dims: ModelDims,
    pub user_names: Vec<String>,
    pub resource_names: Vec<String>,
    pub rewards: RewardTables,
    pub emergency: EmergencyMatrix,
    pub behavior: RequestBehavior,
    pub variant: RewardVariant,
    pub beta: f64,
}

impl Scenario {
    /// Checks label counts, the discount factor, reward finiteness and the
    /// emergency matrix.
    pub fn validate(&self) -> Result<(), Error> {
        if self.user_names.len() != self.dims.num_users() {
            return Err(Error::LabelCount {
                what: "user",
                expected: self.dims.num_users(),
                got: self.user_names.len(),
            });
        }
        if self.resource_names.len() != self.dims.num_resources() {
            return Err(Error::LabelCount {
                what: "resource",
                expected: self.dims.num_resources(),
                got: self.resource_names.len(),
            });
        }
        if !(0.0..1.0).contains(&self.beta) {
            return Err(Error::InvalidBeta(self.beta));
        }
        if !self.rewards.is_finite() {
            return Err(Error::NonFiniteReward(format!("{:?}", self.rewards)));
        }
        EmergencyMatrix::new(self.emergency.rows())?;
        Ok(())
    }

    pub fn transition_model(&self) -> TransitionModel {
        TransitionModel::new(self.dims, self.emergency, self.behavior)
    }

    pub fn state_space(&self) -> StateSpace {
        StateSpace::new(self.dims)
    }

    /// Same scenario with calm → alert probability `p` and alert absorbing.
    pub fn with_alert_probability(&self, p: f64) -> Result<Self, Error> {
        Ok(Self { emergency: EmergencyMatrix::with_alert_probability(p)?, ..self.clone() })
    }

    pub fn user_index(&self, name: &str) -> Option<usize> {
        self.user_names.iter().position(|u| u == name)
    }

    pub fn resource_index(&self, name: &str) -> Option<usize> {
        self.resource_names.iter().position(|r| r == name)
    }

    pub fn access_by_name(&self, user: &str, resource: &str) -> Option<Access> {
        self.dims.access(self.user_index(user)?, self.resource_index(resource)?)
    }

    /// `(user label, resource label)`, `eps` for the empty request.
    pub fn request_labels(&self, r: Request) -> (&str, &str) {
        match r {
            Request::Access(a) => (&self.user_names[a.user], &self.resource_names[a.resource]),
            Request::Empty => ("eps", "eps"),
        }
    }

    /// Hex digest of the canonical rendering.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(crate::config::render_scenario(self).as_bytes());
        digest[..16].iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::builtin_scenario;

    #[test]
    fn validation_rejects_bad_beta_and_labels() {
        let sc = builtin_scenario("table2_once").unwrap();
        assert!(sc.validate().is_ok());
        let bad = Scenario { beta: 1.0, ..sc.clone() };
        assert!(matches!(bad.validate(), Err(Error::InvalidBeta(_))));
        let bad = Scenario { user_names: vec!["alice".into()], ..sc.clone() };
        assert!(matches!(bad.validate(), Err(Error::LabelCount { .. })));
        let bad = Scenario { emergency: EmergencyMatrix::new_unchecked([[0.5, 0.1], [0.0, 1.0]]), ..sc };
        assert!(matches!(bad.validate(), Err(Error::NonStochastic { .. })));
    }

    #[test]
    fn fingerprint_distinguishes_scenarios() {
        let a = builtin_scenario("table2_once").unwrap();
        let b = builtin_scenario("table2_all").unwrap();
        assert_eq!(a.fingerprint(), a.clone().fingerprint());
        assert_ne!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.fingerprint().len(), 32);
    }

    #[test]
    fn name_lookup() {
        let sc = builtin_scenario("table1").unwrap();
        let a = sc.access_by_name("bob", "high").unwrap();
        assert_eq!((a.user, a.resource), (1, 0));
        assert!(sc.access_by_name("carol", "high").is_none());
        assert_eq!(sc.request_labels(Request::Empty), ("eps", "eps"));
    }
}
