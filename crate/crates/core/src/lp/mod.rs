//! Linear programming: a self-contained simplex engine and the Bellman LP.

mod bellman;
mod simplex;

pub use bellman::{build_bellman_lp, verify_solution, VerificationReport};
pub use simplex::{
    simplex_solve, Constraint, LinearProgram, LpSolution, LpStatus, PivotRule, Relation, SimplexOptions,
};
