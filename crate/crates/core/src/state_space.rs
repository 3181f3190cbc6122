//! State space of an access control MDP.
//!
//! A state is a triple `(emergency, granted, request)`:
//!
//! ```text
//! Σ = {calm, alert} × P(USERS × RESOURCES) × (USERS × RESOURCES ∪ {eps})
//! ```
//!
//! The powerset component is encoded as an integer whose bit `u·NR + r` is
//! set iff the access `(u, r)` has been granted. States are enumerated
//! emergency-major, then by set index, then by request (bit order, with the
//! empty request last), which gives the dense index used by every solver.

use std::fmt;

use crate::error::Error;

/// Default bound on `NU · NR`, i.e. on the number of bits in an access set.
pub const DEFAULT_STATE_SPACE_CAP: u32 = 12;

/// Number of users and resources of a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModelDims {
    num_users: usize,
    num_resources: usize,
}

impl ModelDims {
    pub fn new(num_users: usize, num_resources: usize) -> Result<Self, Error> {
        Self::with_cap(num_users, num_resources, DEFAULT_STATE_SPACE_CAP)
    }

    /// Like [`ModelDims::new`] with an explicit bound on `NU · NR`.
    pub fn with_cap(num_users: usize, num_resources: usize, cap_bits: u32) -> Result<Self, Error> {
        if num_users == 0 || num_resources == 0 {
            return Err(Error::InvalidDims { num_users, num_resources });
        }
        let bits = num_users.saturating_mul(num_resources);
        // 2^bits must also fit the index arithmetic.
        if bits > cap_bits as usize || bits >= usize::BITS as usize - 8 {
            return Err(Error::Capacity { bits, cap: cap_bits });
        }
        Ok(Self { num_users, num_resources })
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_resources(&self) -> usize {
        self.num_resources
    }

    /// `n = NU · NR`, the number of distinct accesses.
    pub fn num_accesses(&self) -> usize {
        self.num_users * self.num_resources
    }

    /// `2^n`, the number of access sets.
    pub fn num_sets(&self) -> usize {
        1usize << self.num_accesses()
    }

    /// `n + 1`: every access plus the empty request.
    pub fn num_requests(&self) -> usize {
        self.num_accesses() + 1
    }

    pub fn num_states(&self) -> usize {
        2 * self.num_sets() * self.num_requests()
    }

    /// The set containing every access.
    pub fn full_set(&self) -> AccessSet {
        AccessSet(self.num_sets() as u64 - 1)
    }

    pub fn access(&self, user: usize, resource: usize) -> Option<Access> {
        (user < self.num_users && resource < self.num_resources).then_some(Access { user, resource })
    }

    /// Accesses in bit order (user-major).
    pub fn accesses(&self) -> impl Iterator<Item = Access> + '_ {
        (0..self.num_users).flat_map(move |user| (0..self.num_resources).map(move |resource| Access { user, resource }))
    }

    /// Inverse of [`access_bit_index`].
    pub fn access_from_bit(&self, bit: usize) -> Option<Access> {
        (bit < self.num_accesses())
            .then(|| Access { user: bit / self.num_resources, resource: bit % self.num_resources })
    }

    /// Requests in enumeration order: every access, then the empty request.
    pub fn requests(&self) -> impl Iterator<Item = Request> + '_ {
        self.accesses().map(Request::Access).chain(std::iter::once(Request::Empty))
    }

    pub fn contains_set(&self, k: AccessSet) -> bool {
        (k.0 as usize) < self.num_sets()
    }

    pub fn contains_state(&self, s: &State) -> bool {
        self.contains_set(s.granted)
            && match s.request {
                Request::Empty => true,
                Request::Access(a) => a.user < self.num_users && a.resource < self.num_resources,
            }
    }
}

/// A `(user, resource)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Access {
    pub user: usize,
    pub resource: usize,
}

/// The access pending control, or the empty request `eps`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Request {
    Access(Access),
    Empty,
}

impl Request {
    pub fn access(self) -> Option<Access> {
        match self {
            Request::Access(a) => Some(a),
            Request::Empty => None,
        }
    }

    pub fn is_empty(self) -> bool {
        matches!(self, Request::Empty)
    }
}

/// Index into the powerset of accesses; bit `i` is set iff the access with
/// bit index `i` is a member.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct AccessSet(pub u64);

impl AccessSet {
    pub const EMPTY: AccessSet = AccessSet(0);

    pub fn index(self) -> u64 {
        self.0
    }

    pub fn len(self) -> u32 {
        self.0.count_ones()
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for AccessSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Emergency {
    Calm,
    Alert,
}

impl Emergency {
    pub const ALL: [Emergency; 2] = [Emergency::Calm, Emergency::Alert];

    pub fn index(self) -> usize {
        match self {
            Emergency::Calm => 0,
            Emergency::Alert => 1,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Emergency::Calm => "calm",
            Emergency::Alert => "alert",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        match s {
            "calm" => Some(Emergency::Calm),
            "alert" => Some(Emergency::Alert),
            _ => None,
        }
    }
}

impl fmt::Display for Emergency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Authorization decision. `Deny` orders before `Allow`; ties between
/// decision values resolve to the smaller action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    Deny,
    Allow,
}

impl Action {
    /// Canonical order.
    pub const ALL: [Action; 2] = [Action::Deny, Action::Allow];

    pub fn index(self) -> usize {
        match self {
            Action::Deny => 0,
            Action::Allow => 1,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Action::Deny => "deny",
            Action::Allow => "allow",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        match s {
            "deny" => Some(Action::Deny),
            "allow" => Some(Action::Allow),
            _ => None,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct State {
    pub emergency: Emergency,
    pub granted: AccessSet,
    pub request: Request,
}

impl State {
    pub fn new(emergency: Emergency, granted: AccessSet, request: Request) -> Self {
        Self { emergency, granted, request }
    }
}

/// Exponent of the access in the powerset encoding: `u · NR + r`.
pub fn access_bit_index(a: Access, d: &ModelDims) -> usize {
    a.user * d.num_resources + a.resource
}

pub fn set_contains(k: AccessSet, a: Access, d: &ModelDims) -> bool {
    (k.0 >> access_bit_index(a, d)) & 1 == 1
}

pub fn set_insert(k: AccessSet, a: Access, d: &ModelDims) -> AccessSet {
    AccessSet(k.0 | (1u64 << access_bit_index(a, d)))
}

/// Dense bijection between states and `0..num_states`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateSpace {
    dims: ModelDims,
}

impl StateSpace {
    pub fn new(dims: ModelDims) -> Self {
        Self { dims }
    }

    pub fn dims(&self) -> &ModelDims {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.num_states()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn request_slot(&self, r: Request) -> usize {
        match r {
            Request::Access(a) => access_bit_index(a, &self.dims),
            Request::Empty => self.dims.num_accesses(),
        }
    }

    pub fn state_index(&self, s: &State) -> usize {
        let sets = self.dims.num_sets();
        let reqs = self.dims.num_requests();
        (s.emergency.index() * sets + s.granted.0 as usize) * reqs + self.request_slot(s.request)
    }

    /// Panics if `i` is out of range.
    pub fn index_state(&self, i: usize) -> State {
        assert!(i < self.len(), "state index {i} out of range {}", self.len());
        let reqs = self.dims.num_requests();
        let sets = self.dims.num_sets();
        let slot = i % reqs;
        let rest = i / reqs;
        let granted = AccessSet((rest % sets) as u64);
        let emergency = Emergency::ALL[rest / sets];
        let request = self.dims.access_from_bit(slot).map_or(Request::Empty, Request::Access);
        State { emergency, granted, request }
    }

    pub fn states(&self) -> impl Iterator<Item = State> + '_ {
        (0..self.len()).map(move |i| self.index_state(i))
    }
}

/// All states in canonical order.
pub fn enumerate_states(d: &ModelDims) -> Vec<State> {
    StateSpace::new(*d).states().collect()
}
