//! Numerical laboratory for Stein factors of Poisson-type approximations.
//!
//! The crate builds immigration-death generators on truncated state
//! spaces (integers, lattice boxes, point configurations), perturbs them
//! at designated states, and computes stationary laws, Stein-equation
//! solutions and distances exactly, so that identities of the form
//! `d(L(W), Po) = P[W = w*] * sup_h |D g_h(w*)|` can be checked to high
//! relative precision.

pub mod ctmc;
pub mod distances;
pub mod error;
pub mod poisson_multi;
pub mod point_process;
pub mod poisson_uni;
pub mod rate_fit;
pub mod state_space;
mod sum;

pub use error::{Error, Result};

pub use ctmc::{
    perturbed_stationary, simulate, solve_stein, stationary, Generator, PerturbedStationary, ProbVec,
    SteinSolution, SteinSolver,
};
pub use distances::{d1, d2_exact, d2_lower_bound, lipschitz_check, tv, D2Report, LipschitzReport};
pub use point_process::{PPProblem, TestFunction42};
pub use poisson_multi::MultiProblem;
pub use poisson_uni::UniProblem;
pub use rate_fit::{fit_rate, median, relative_spread, RateFit};
pub use state_space::{BoxSpace, Carrier, ConfigSpace, Move, SpaceKey, StateSpace, UniSpace};
