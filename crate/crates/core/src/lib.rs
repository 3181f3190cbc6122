//! Access control Markov decision processes.
//!
//! An access control MDP couples an emergency status, the set of accesses
//! granted so far and the access request pending control. Allowing or
//! denying the request moves the system to a new state and earns a reward;
//! the optimal policy maximizes the discounted sum of rewards. This crate
//! builds the exact state space, transitions and rewards of such a model,
//! solves it with a Bellman linear program (own two-phase simplex) or with
//! value iteration, and derives decision values, policies and
//! emergency-probability sweeps from the solution.

pub mod config;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod lp;
pub mod model;
pub mod policy;
pub mod rewards;
pub mod scenario;
pub mod state_space;
pub mod value_file;
pub mod vi;

pub use config::{builtin_scenario, parse_scenario, render_scenario, ScenarioSource, BUILTIN_NAMES};
pub use dynamics::{EmergencyMatrix, RequestBehavior, TransitionModel};
pub use error::Error;
pub use model::CompiledModel;
pub use policy::{Decision, Solution};
pub use rewards::{RewardTables, RewardVariant};
pub use scenario::Scenario;
pub use state_space::{Access, AccessSet, Action, Emergency, ModelDims, Request, State, StateSpace};
pub use vi::ValueVector;
