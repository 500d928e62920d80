//! Univariate Poisson approximation: Stein solutions, their bounds, and
//! the immigration-death chain perturbed at a single state `k`.
//!
//! Solutions are in difference form: `g` solves
//! `λ g(j+1) - j g(j) = h(j) - E h(Z)` with the gauge `g(0) = g(1)`.
//! In generator form `G` with `g(j) = G(j) - G(j-1)` this is `A G = h - E h`.

use rayon::prelude::*;
use statrs::distribution::{DiscreteCDF, Poisson};

use crate::ctmc::{perturbed_stationary, Generator, ProbVec, SteinSolution, STEIN_TOLERANCE};
use crate::error::{Error, Result};
use crate::state_space::{default_uni_n_max, Move, StateSpace, UniSpace};

/// The chain `W_k`: immigration rate `λ + δ_k(w)`, total death rate `w + δ_k(w)`.
#[derive(Debug, Clone)]
pub struct UniProblem {
    lambda: f64,
    k: u32,
    space: UniSpace,
}

impl UniProblem {
    /// Uses the default truncation for `λ`.
    pub fn new(lambda: f64, k: u32) -> Result<Self> {
        check_lambda(lambda)?;
        Self::with_space(lambda, k, UniSpace::new(default_uni_n_max(lambda).max(k + 1))?)
    }

    pub fn with_space(lambda: f64, k: u32, space: UniSpace) -> Result<Self> {
        check_lambda(lambda)?;
        if k < 1 || k >= space.n_max() {
            return Err(Error::OutOfRange(format!(
                "perturbation state k = {k} must lie in [1, {})",
                space.n_max()
            )));
        }
        Ok(Self { lambda, k, space })
    }

    /// `⌊λ⌋ ∨ 1`.
    pub fn default_k(lambda: f64) -> u32 {
        (lambda.floor() as u32).max(1)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn space(&self) -> &UniSpace {
        &self.space
    }

    pub fn unperturbed(&self) -> Result<Generator> {
        immigration_death(self.lambda, &self.space)
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("λ must be positive, got {lambda}")))
    }
}

/// Immigration rate `λ`, unit per-capita death rate.
pub fn immigration_death(lambda: f64, space: &UniSpace) -> Result<Generator> {
    check_lambda(lambda)?;
    Generator::assemble(space, |_, s, mv| match mv {
        Move::Up(_) => lambda,
        Move::Down(_) => s[0] as f64,
    })
}

pub fn perturbed_uni(problem: &UniProblem) -> Result<Generator> {
    let (lambda, k) = (problem.lambda, problem.k);
    Generator::assemble(&problem.space, |_, s, mv| {
        let bump = if s[0] == k { 1.0 } else { 0.0 };
        match mv {
            Move::Up(_) => lambda + bump,
            Move::Down(_) => s[0] as f64 + bump,
        }
    })
}

/// `Po(λ)` restricted to `{0, ..., n_max}` and renormalised.
#[derive(Debug, Clone)]
pub struct TruncatedPoisson {
    pub law: ProbVec,
    /// `P[Z > n_max]` before renormalisation.
    pub tail_mass: f64,
}

pub fn poisson_pmf(lambda: f64, space: &UniSpace) -> Result<TruncatedPoisson> {
    check_lambda(lambda)?;
    let n = space.n_max();
    let weights = poisson_weights(lambda, n);
    let tail_mass = Poisson::new(lambda)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?
        .sf(n as u64);
    Ok(TruncatedPoisson {
        law: ProbVec::from_weights(space.key(), weights)?,
        tail_mass,
    })
}

/// Unnormalised Poisson weights on `0..=n`, built outward from the mode.
pub(crate) fn poisson_weights(lambda: f64, n: u32) -> Vec<f64> {
    let n = n as usize;
    let mode = (lambda.floor() as usize).min(n);
    let mut w = vec![0.0; n + 1];
    w[mode] = 1.0;
    for j in mode..n {
        w[j + 1] = w[j] * lambda / (j + 1) as f64;
    }
    for j in (1..=mode).rev() {
        w[j - 1] = w[j] * j as f64 / lambda;
    }
    w
}

/// Solves the truncated equation for a centred `ht` (length `n_max + 1`).
///
/// With `R(j) = λ g(j+1)`, the recursion `R(j) = ht(j) + (j/λ) R(j-1)` is
/// run upwards below `λ` and `R(j) = (λ/(j+1)) (R(j+1) - ht(j+1))`,
/// `R(n_max) = 0`, downwards above it; both multipliers stay below one.
fn solve_centered(lambda: f64, ht: &[f64]) -> Vec<f64> {
    let n = ht.len() - 1;
    let split = (lambda.floor() as usize).min(n - 1);
    let mut r = vec![0.0; n + 1];
    r[0] = ht[0];
    for j in 1..=split {
        r[j] = ht[j] + (j as f64 / lambda) * r[j - 1];
    }
    for j in (split + 1..n).rev() {
        r[j] = (lambda / (j + 1) as f64) * (r[j + 1] - ht[j + 1]);
    }
    let mut g = vec![0.0; n + 1];
    for j in 0..n {
        g[j + 1] = r[j] / lambda;
    }
    g[0] = g[1];
    g
}

fn residual(lambda: f64, g: &[f64], ht: &[f64], hmax: f64) -> f64 {
    let n = g.len() - 1;
    let mut worst = 0.0f64;
    for j in 0..=n {
        let birth = if j < n { lambda * g[j + 1] } else { 0.0 };
        worst = worst.max((birth - j as f64 * g[j] - ht[j]).abs());
    }
    let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = hmax + (lambda + n as f64) * gmax;
    if scale == 0.0 {
        0.0
    } else {
        worst / scale
    }
}

/// Stein solution for `h` against the truncated `Po(λ)`.
pub fn stein_solution_uni(lambda: f64, h: &[f64], space: &UniSpace) -> Result<SteinSolution> {
    let pmf = poisson_pmf(lambda, space)?;
    stein_solution_with(lambda, h, &pmf.law)
}

fn stein_solution_with(lambda: f64, h: &[f64], law: &ProbVec) -> Result<SteinSolution> {
    if h.len() != law.len() {
        return Err(Error::InvalidParameter(format!(
            "test function has {} entries for {} states",
            h.len(),
            law.len()
        )));
    }
    let mean = law.expect(h);
    let ht: Vec<f64> = h.iter().map(|v| v - mean).collect();
    let g = solve_centered(lambda, &ht);
    let hmax = h.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let res = residual(lambda, &g, &ht, hmax);
    if res > STEIN_TOLERANCE {
        return Err(Error::Residual {
            residual: res,
            tol: STEIN_TOLERANCE,
        });
    }
    Ok(SteinSolution::new(law.key().clone(), g, 0, res))
}

/// Calls `f(j, g)` with the solution `g` for `h = δ_j`, for every state `j`.
fn for_each_indicator(lambda: f64, law: &ProbVec, mut f: impl FnMut(usize, &[f64])) {
    let n = law.len();
    let mut ht = vec![0.0; n];
    for j in 0..n {
        for (i, v) in ht.iter_mut().enumerate() {
            *v = if i == j { 1.0 } else { 0.0 } - law.get(j);
        }
        let g = solve_centered(lambda, &ht);
        f(j, &g);
    }
}

/// `sup_{h in H_TV} |Δg_h(k)| = ½ Σ_j |Δg_{δ_j}(k)|`.
pub fn sup_delta_g(lambda: f64, k: u32, space: &UniSpace) -> Result<f64> {
    let k = k as usize;
    if k < 1 || k >= space.n_max() as usize {
        return Err(Error::OutOfRange(format!("k = {k} must lie in [1, {})", space.n_max())));
    }
    let law = poisson_pmf(lambda, space)?.law;
    let mut total = 0.0;
    for_each_indicator(lambda, &law, |_, g| total += (g[k + 1] - g[k]).abs());
    Ok(0.5 * total)
}

/// `sup_{h in H_TV} |Δg_h(k)|` for every `k` in `0..n_max`.
pub fn sup_delta_g_profile(lambda: f64, space: &UniSpace) -> Result<Vec<f64>> {
    let law = poisson_pmf(lambda, space)?.law;
    let n = space.n_max() as usize;
    let mut acc = vec![0.0; n];
    for_each_indicator(lambda, &law, |_, g| {
        for (k, a) in acc.iter_mut().enumerate() {
            *a += (g[k + 1] - g[k]).abs();
        }
    });
    Ok(acc.into_iter().map(|a| 0.5 * a).collect())
}

/// Largest `‖g_h‖` and `‖Δg_h‖` over `h = δ_j`, against the uniform bounds
/// `1 ∧ √(2/(λe))` and `(1 - e^{-λ})/λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformBounds {
    pub lambda: f64,
    pub max_g: f64,
    pub g_bound: f64,
    pub max_delta_g: f64,
    pub delta_g_bound: f64,
}

/// Relative slack granted to bound comparisons; the bound on `Δg` is attained.
pub const BOUND_SLACK: f64 = 1e-12;

impl UniformBounds {
    pub fn holds(&self) -> bool {
        self.max_g <= self.g_bound * (1.0 + BOUND_SLACK)
            && self.max_delta_g <= self.delta_g_bound * (1.0 + BOUND_SLACK)
    }
}

pub fn g_bound(lambda: f64) -> f64 {
    (2.0 / (lambda * std::f64::consts::E)).sqrt().min(1.0)
}

pub fn delta_g_bound(lambda: f64) -> f64 {
    -(-lambda).exp_m1() / lambda
}

pub fn uniform_bounds(lambda: f64, space: &UniSpace) -> Result<UniformBounds> {
    let law = poisson_pmf(lambda, space)?.law;
    let (mut max_g, mut max_dg) = (0.0f64, 0.0f64);
    for_each_indicator(lambda, &law, |_, g| {
        for w in g.windows(2) {
            max_g = max_g.max(w[1].abs());
            max_dg = max_dg.max((w[1] - w[0]).abs());
        }
    });
    Ok(UniformBounds {
        lambda,
        max_g,
        g_bound: g_bound(lambda),
        max_delta_g: max_dg,
        delta_g_bound: delta_g_bound(lambda),
    })
}

/// Both sides of `d_TV(L(W_k), Po(λ)) = P[W_k = k] sup_h |Δg_h(k)|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniIdentity {
    pub lambda: f64,
    pub k: u32,
    /// `d_TV(L(W_k), Po(λ))` from the stationary difference.
    pub lhs: f64,
    /// `P[W_k = k] · sup_dg`.
    pub rhs: f64,
    pub rel_err: f64,
    pub p_k: f64,
    pub sup_dg: f64,
    /// Truncation leak of the perturbed chain under its stationary law.
    pub leak: f64,
}

pub fn verify_identity_2_7(problem: &UniProblem) -> Result<UniIdentity> {
    let (lambda, k) = (problem.lambda, problem.k);
    let base = problem.unperturbed()?;
    let pmf = poisson_pmf(lambda, &problem.space)?;
    let pert = perturbed_uni(problem)?;
    let response = perturbed_stationary(&pert, &base, &pmf.law)?;
    let lhs = response.tv();
    let p_k = response.pi.get(k as usize);
    let sup_dg = sup_delta_g(lambda, k, &problem.space)?;
    let rhs = p_k * sup_dg;
    Ok(UniIdentity {
        lambda,
        k,
        lhs,
        rhs,
        rel_err: (lhs - rhs).abs() / rhs,
        p_k,
        sup_dg,
        leak: pert.leak_under(&response.pi),
    })
}

/// `d_TV(L(W_k), Po(λ)) / P[W_k = k]` for `k = 1, ..., n_max - 1`.
pub fn ratio_profile(lambda: f64, space: &UniSpace) -> Result<Vec<f64>> {
    let base = immigration_death(lambda, space)?;
    let law = poisson_pmf(lambda, space)?.law;
    (1..space.n_max())
        .into_par_iter()
        .map(|k| {
            let problem = UniProblem::with_space(lambda, k, space.clone())?;
            let response = perturbed_stationary(&perturbed_uni(&problem)?, &base, &law)?;
            Ok(response.tv() / response.pi.get(k as usize))
        })
        .collect()
}

/// One row of the `λ`-sweep at `k = ⌊λ⌋ ∨ 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniRateRow {
    pub identity: UniIdentity,
    /// `λ · sup_h |Δg_h(k)|`.
    pub scaled_sup: f64,
    /// `d_TV · λ^{3/2}`.
    pub scaled_tv: f64,
    /// `P[W_k = k] · λ^{1/2}`.
    pub scaled_p: f64,
}

pub fn rate_check_2_9(lambda_grid: &[f64]) -> Result<Vec<UniRateRow>> {
    lambda_grid
        .par_iter()
        .map(|&lambda| {
            let problem = UniProblem::new(lambda, UniProblem::default_k(lambda))?;
            let identity = verify_identity_2_7(&problem)?;
            Ok(UniRateRow {
                identity,
                scaled_sup: lambda * identity.sup_dg,
                scaled_tv: identity.lhs * lambda.powf(1.5),
                scaled_p: identity.p_k * lambda.sqrt(),
            })
        })
        .collect()
}
