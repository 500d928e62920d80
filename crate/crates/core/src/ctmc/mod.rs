//! Conservative generators, stationary laws, Stein solves and simulation.

mod band;
mod elimination;
mod generator;
mod prob;
mod simulate;
mod stationary;

pub use elimination::{
    perturbed_stationary, solve_stein, PerturbedStationary, SteinSolver, CENTERING_TOLERANCE,
    STEIN_TOLERANCE,
};
pub use generator::Generator;
pub use prob::{ProbVec, SteinSolution};
pub use simulate::simulate;
pub use stationary::{stationary, stationary_residual, GTH_BAND_BUDGET, STATIONARY_TOLERANCE};
