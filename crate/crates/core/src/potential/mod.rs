//! Random-walk potential theory on a [`Graph`]: hitting, heat kernel,
//! Green function, equilibrium measure, capacity and harmonic measure.
//!
//! "Infinity" is realized as an absorbing shell. Exact quantities come from
//! sparse linear solves on a finite neighborhood of the set of interest, and
//! a sequence of growing neighborhoods certifies convergence.

mod heat;
mod launch;
mod linalg;
mod solver;
mod walk;

use thiserror::Error;

use crate::graph::GraphError;

pub use heat::{heat_kernel_diag, heat_kernel_diag_with_budget};
pub use launch::{launch_law, LaunchLaw};
pub use solver::{
    box_green, capacity_sandwich_check, solve_escape, spectral_capacity_check, BoxGreen, PotentialSolveResult,
    SandwichReport, SolverConfig,
};
pub use walk::{green_mc, green_mc_multi, run_walk, GreenEstimate, WalkKind, WalkOutcome};

#[cfg(test)]
pub(crate) use solver::is_connected;
pub(crate) use walk::lattice_jump;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PotentialError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("walk exceeded its step budget of {0}")]
    StepBudget(u64),
    #[error("linear solve did not converge: {0}")]
    Solver(String),
    #[error("{0}")]
    Domain(String),
    #[error("resource limit exceeded: {0}")]
    Resource(String),
}
