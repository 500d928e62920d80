use thiserror::Error;

/// Errors produced by the numerical laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("state space has {states} states, above the configured maximum of {max}")]
    Capacity { states: usize, max: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("negative rate {rate} at state {state} for move {mv}")]
    NegativeRate { state: usize, mv: String, rate: f64 },

    #[error("generator is reducible: {unreached} of {states} states are not mutually reachable")]
    Reducible { unreached: usize, states: usize },

    #[error("singular elimination at state {state} (pivot {pivot:e})")]
    Singular { state: usize, pivot: f64 },

    #[error("residual {residual:e} exceeds tolerance {tol:e}")]
    Residual { residual: f64, tol: f64 },

    #[error("power iteration did not converge in {0} sweeps")]
    NoConvergence(usize),

    #[error("right-hand side not centred: <pi, rhs> = {mean:e} exceeds tolerance {tol:e}")]
    NotCentered { mean: f64, tol: f64 },

    #[error("vectors live on different state spaces ({left} vs {right})")]
    SpaceMismatch { left: String, right: String },

    #[error("state out of range: {0}")]
    OutOfRange(String),

    #[error("symmetry condition violated: {0}")]
    Symmetry(String),

    #[error("test function is not 1-Lipschitz w.r.t. d1: |h(xi) - h(eta)| = {gap} > d1 = {d1} at states {left} and {right}")]
    NotLipschitz {
        left: usize,
        right: usize,
        gap: f64,
        d1: f64,
    },

    #[error("{states} configurations exceed the exact-transport guard of {guard}; use d2_lower_bound")]
    TransportTooLarge { states: usize, guard: usize },

    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
