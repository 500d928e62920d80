//! Poisson point process approximation on a finite carrier
//! `Γ = S ∪ {a} ∪ {b}` in the `d2` metric, with the process perturbed at
//! the single-point configurations `δ_a` and `δ_b`.

use rayon::prelude::*;

use crate::ctmc::{perturbed_stationary, Generator, PerturbedStationary, ProbVec, SteinSolver};
use crate::distances::{d2_exact, d2_signed, D2Report, D2_EXACT_GUARD};
use crate::error::{Error, Result};
use crate::poisson_multi::log_plus;
use crate::poisson_uni::stein_solution_uni;
use crate::state_space::{Carrier, ConfigSpace, Move, StateSpace, UniSpace, DEFAULT_MAX_STATES};
use crate::sum::compensated_sum;

pub use crate::distances::lipschitz_check as check_h2_membership;

#[derive(Debug, Clone)]
pub struct PPProblem {
    space: ConfigSpace,
}

impl PPProblem {
    /// Lumped `S` (a single point) and the default truncation.
    pub fn new(lambda_total: f64) -> Result<Self> {
        Self::with_max_states(lambda_total, DEFAULT_MAX_STATES)
    }

    pub fn with_max_states(lambda_total: f64, max_states: usize) -> Result<Self> {
        let carrier = Carrier::new(1, lambda_total)?;
        Ok(Self {
            space: ConfigSpace::for_carrier(carrier, max_states)?,
        })
    }

    pub fn with_space(space: ConfigSpace) -> Self {
        Self { space }
    }

    pub fn carrier(&self) -> &Carrier {
        self.space.carrier()
    }

    pub fn space(&self) -> &ConfigSpace {
        &self.space
    }

    pub fn lambda_total(&self) -> f64 {
        self.carrier().lambda_total()
    }

    pub fn delta_a(&self) -> usize {
        self.space.dirac(self.carrier().a())
    }

    pub fn delta_b(&self) -> usize {
        self.space.dirac(self.carrier().b())
    }

    /// Index of `δ_a + δ_b`.
    pub fn delta_ab(&self) -> Result<usize> {
        let c = self.carrier();
        self.space
            .config_of(&[c.a(), c.b()])
            .ok_or_else(|| Error::OutOfRange("δ_a + δ_b exceeds the truncation".into()))
    }
}

/// Birth rate `λ({α})` at every carrier point, death rate `ξ({α})`.
pub fn pp_operator(problem: &PPProblem) -> Result<Generator> {
    let carrier = problem.carrier();
    let rates: Vec<f64> = (0..carrier.points()).map(|alpha| carrier.intensity(alpha)).collect();
    Generator::assemble(problem.space(), |_, s, mv| match mv {
        Move::Up(alpha) => rates[alpha],
        Move::Down(alpha) => s[alpha] as f64,
    })
}

/// The operator plus, at `δ_a`, rate ½ to `δ_a + δ_b` and rate ½ to `0`,
/// and the mirror image at `δ_b`.
pub fn perturbed_pp(problem: &PPProblem) -> Result<Generator> {
    let carrier = problem.carrier();
    let (a, b) = (carrier.a(), carrier.b());
    let rates: Vec<f64> = (0..carrier.points()).map(|alpha| carrier.intensity(alpha)).collect();
    let (da, db) = (problem.delta_a(), problem.delta_b());
    problem.delta_ab()?;
    Generator::assemble(problem.space(), |i, s, mv| {
        let extra = match mv {
            Move::Up(x) if (i == da && x == b) || (i == db && x == a) => 0.5,
            Move::Down(x) if (i == da && x == a) || (i == db && x == b) => 0.5,
            _ => 0.0,
        };
        extra
            + match mv {
                Move::Up(alpha) => rates[alpha],
                Move::Down(alpha) => s[alpha] as f64,
            }
    })
}

/// Independent Poisson counts at the carrier points, restricted to the
/// truncation and renormalised.
pub fn poisson_process_law(problem: &PPProblem) -> Result<ProbVec> {
    let space = problem.space();
    let carrier = problem.carrier();
    let n = space.n_total_max() as usize;
    let mut ln_fact = vec![0.0f64; n + 1];
    for k in 1..=n {
        ln_fact[k] = ln_fact[k - 1] + (k as f64).ln();
    }
    let ln_rate: Vec<f64> = (0..carrier.points()).map(|alpha| carrier.intensity(alpha).ln()).collect();
    let logs: Vec<f64> = (0..space.len())
        .map(|i| {
            space
                .state(i)
                .iter()
                .zip(&ln_rate)
                .map(|(&k, lr)| k as f64 * lr - ln_fact[k as usize])
                .sum()
        })
        .collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    ProbVec::from_weights(space.key(), logs.into_iter().map(|l| (l - top).exp()).collect())
}

/// `h(ξ) = 1/ξ(Γ)` on `{ξ ≠ 0 : ξ({a}) = m_a, ξ({b}) = m_b}`, zero elsewhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TestFunction42 {
    m_a: u32,
    m_b: u32,
}

impl TestFunction42 {
    pub const ALL: [TestFunction42; 4] = [
        TestFunction42 { m_a: 0, m_b: 0 },
        TestFunction42 { m_a: 0, m_b: 1 },
        TestFunction42 { m_a: 1, m_b: 0 },
        TestFunction42 { m_a: 1, m_b: 1 },
    ];

    pub fn new(m_a: u32, m_b: u32) -> Result<Self> {
        if m_a > 1 || m_b > 1 {
            return Err(Error::InvalidParameter(format!("m_a, m_b must be 0 or 1, got ({m_a}, {m_b})")));
        }
        Ok(Self { m_a, m_b })
    }

    pub fn m_a(&self) -> u32 {
        self.m_a
    }

    pub fn m_b(&self) -> u32 {
        self.m_b
    }

    pub fn eval(&self, xi: &[u32], carrier: &Carrier) -> f64 {
        let total: u32 = xi.iter().sum();
        if total == 0 || xi[carrier.a()] != self.m_a || xi[carrier.b()] != self.m_b {
            0.0
        } else {
            1.0 / total as f64
        }
    }

    pub fn values(&self, space: &ConfigSpace) -> Vec<f64> {
        (0..space.len()).map(|i| self.eval(space.state(i), space.carrier())).collect()
    }
}

/// `Δ_ab g(0) = g(δ_a + δ_b) - g(δ_a) - g(δ_b) + g(0)`.
pub fn delta_ab(problem: &PPProblem, g: &[f64]) -> Result<f64> {
    Ok(g[problem.delta_ab()?] - g[problem.delta_a()] - g[problem.delta_b()] + g[problem.space().empty()])
}

/// `1 ∧ (5 / 2|λ|)(1 + 2 log⁺(2|λ|/5))`.
pub fn uniform_bound_4_1(lambda_total: f64) -> f64 {
    (2.5 / lambda_total * (1.0 + 2.0 * log_plus(2.0 * lambda_total / 5.0))).min(1.0)
}

/// Both sides of `E A g(Ψ) = -P[Ψ = δ_a] Δ_ab g(0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PPIdentity {
    pub lhs: f64,
    pub rhs: f64,
    pub rel_err: f64,
}

/// `response` is the stationary law of [`perturbed_pp`] relative to
/// [`poisson_process_law`]; `operator` is the unperturbed [`pp_operator`].
/// `lhs` sums `(π' - π)(ξ) (A g)(ξ)`, which equals `E A g(Ψ)` since
/// `π A = 0`; `P[Ψ = δ_a]` decays like `e^{-|λ|}`, far below the rounding
/// level of a plain expectation.
pub fn verify_identity_4_5(
    problem: &PPProblem,
    operator: &Generator,
    response: &PerturbedStationary,
    g: &[f64],
) -> Result<PPIdentity> {
    let pi = &response.pi;
    if pi.key() != operator.key() {
        return Err(Error::SpaceMismatch {
            left: operator.key().to_string(),
            right: pi.key().to_string(),
        });
    }
    let ag = operator.apply(g);
    let lhs = compensated_sum(response.delta.iter().zip(&ag).map(|(d, a)| d * a));
    let rhs = -pi.get(problem.delta_a()) * delta_ab(problem, g)?;
    let diff = (lhs - rhs).abs();
    Ok(PPIdentity {
        lhs,
        rhs,
        rel_err: if rhs != 0.0 { diff / rhs.abs() } else { diff },
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaAbRow {
    pub lambda: f64,
    /// `|Δ_ab g_h(0)|`.
    pub v: f64,
    pub bound: f64,
    pub ok: bool,
    /// `v |λ| / log |λ|`.
    pub scaled: f64,
}

/// Solves the Stein equation for `h` on each problem and tabulates
/// `|Δ_ab g_h(0)|` against the uniform bound.
pub fn delta_ab_asymptotic(problems: &[PPProblem], h: TestFunction42) -> Result<Vec<DeltaAbRow>> {
    problems
        .par_iter()
        .map(|problem| {
            let solver = SteinSolver::with_stationary(&pp_operator(problem)?, poisson_process_law(problem)?)?;
            let g = solver.solve_test_function(&h.values(problem.space()))?;
            let v = delta_ab(problem, g.values())?.abs();
            let lambda = problem.lambda_total();
            let bound = uniform_bound_4_1(lambda);
            Ok(DeltaAbRow {
                lambda,
                v,
                bound,
                ok: v <= bound,
                scaled: v * lambda / lambda.ln(),
            })
        })
        .collect()
}

/// Covector of `g ↦ Δ_ab g_h(0)`: `Δ_ab g_h(0) = Σ_ξ c(ξ) h(ξ)`.
fn delta_ab_covector(problem: &PPProblem, solver: &SteinSolver) -> Result<Vec<f64>> {
    solver.covector(&[
        (problem.delta_ab()?, 1.0),
        (problem.delta_a(), -1.0),
        (problem.delta_b(), -1.0),
        (problem.space().empty(), 1.0),
    ])
}

#[derive(Debug, Clone)]
pub struct PPRateRow {
    pub lambda: f64,
    /// `P[Ψ = δ_a]`.
    pub p: f64,
    /// `|P[Ψ = δ_a] - P[Ψ = δ_b]|`.
    pub asymmetry: f64,
    /// `|Δ_ab g_h(0)|` for each of [`TestFunction42::ALL`].
    pub per_function: [f64; 4],
    pub v_star: f64,
    pub lower: f64,
    pub upper: f64,
    /// Transport distance between the two stationary laws.
    pub d2_exact: Option<D2Report>,
    /// `P[Ψ = δ_a] sup_{h in H2} |Δ_ab g_h(0)|` by transport on the covector.
    pub d2_identity: Option<f64>,
    /// `v* |λ| / log |λ|`.
    pub scaled: f64,
    pub leak: f64,
    pub response: PerturbedStationary,
}

impl PPRateRow {
    pub fn bracketed(&self) -> Option<bool> {
        self.d2_exact.as_ref().map(|d| self.lower <= d.value && d.value <= self.upper)
    }
}

pub fn analyse_pp(problem: &PPProblem) -> Result<PPRateRow> {
    let base = pp_operator(problem)?;
    let base_pi = poisson_process_law(problem)?;
    let pert = perturbed_pp(problem)?;
    let response = perturbed_stationary(&pert, &base, &base_pi)?;
    let solver = SteinSolver::with_stationary(&base, base_pi)?;
    let c = delta_ab_covector(problem, &solver)?;
    let space = problem.space();
    let mut per_function = [0.0; 4];
    for (v, tf) in per_function.iter_mut().zip(TestFunction42::ALL) {
        *v = compensated_sum(c.iter().zip(tf.values(space)).map(|(c, h)| c * h)).abs();
    }
    let v_star = per_function.iter().copied().fold(0.0, f64::max);
    let p = response.pi.get(problem.delta_a());
    let lambda = problem.lambda_total();
    let small = space.len() <= D2_EXACT_GUARD;
    let d2 = if small {
        Some(d2_exact(&response.pi, solver.stationary(), space)?)
    } else {
        None
    };
    let d2_identity = if small { Some(p * d2_signed(&c, space)?.value) } else { None };
    Ok(PPRateRow {
        lambda,
        p,
        asymmetry: (p - response.pi.get(problem.delta_b())).abs(),
        per_function,
        v_star,
        lower: p * v_star,
        upper: p * uniform_bound_4_1(lambda),
        d2_exact: d2,
        d2_identity,
        scaled: v_star * lambda / lambda.ln(),
        leak: pert.leak_under(&response.pi),
        response,
    })
}

/// [`analyse_pp`] over a grid, in grid order.
pub fn verify_rate_4_6(problems: &[PPProblem]) -> Result<Vec<PPRateRow>> {
    problems.par_iter().map(analyse_pp).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountRow {
    pub lambda: f64,
    pub p: f64,
    /// `d_TV(L(|Ψ|), Po(|λ|))` from the projected stationary difference.
    pub count_tv: f64,
    /// `P[Ψ = δ_a] sup_{h in H_TV} |Δ²g_h(0)|` from the univariate solver.
    pub identity: f64,
    pub rel_err: f64,
    /// `count_tv |λ| / p`.
    pub scaled: f64,
    /// `P[Ψ = δ_a] v*`.
    pub d2_proxy: f64,
    /// `d2_proxy / count_tv`.
    pub ratio: f64,
}

/// `sup_{h in H_TV} |g_h(2) - 2 g_h(1) + g_h(0)|` for `Po(λ)` on `0..=n_max`.
pub fn sup_second_difference_at_zero(lambda: f64, space: &UniSpace) -> Result<f64> {
    let n = space.n_max() as usize + 1;
    let mut h = vec![0.0; n];
    let mut total = 0.0;
    for j in 0..n {
        h[j] = 1.0;
        let g = stein_solution_uni(lambda, &h, space)?;
        let g = g.values();
        total += (g[2] - 2.0 * g[1] + g[0]).abs();
        h[j] = 0.0;
    }
    Ok(0.5 * total)
}

fn project_totals(space: &ConfigSpace, values: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; space.n_total_max() as usize + 1];
    for (i, &v) in values.iter().enumerate() {
        out[space.total(i) as usize] += v;
    }
    out
}

pub fn remark_4_2_counts(problems: &[PPProblem]) -> Result<Vec<CountRow>> {
    problems
        .par_iter()
        .map(|problem| {
            let base = pp_operator(problem)?;
            let base_pi = poisson_process_law(problem)?;
            let response = perturbed_stationary(&perturbed_pp(problem)?, &base, &base_pi)?;
            let space = problem.space();
            let count_tv = 0.5 * compensated_sum(project_totals(space, &response.delta).into_iter().map(f64::abs));
            let lambda = problem.lambda_total();
            let p = response.pi.get(problem.delta_a());
            let uni = UniSpace::new(space.n_total_max())?;
            let identity = p * sup_second_difference_at_zero(lambda, &uni)?;
            let solver = SteinSolver::with_stationary(&base, base_pi)?;
            let c = delta_ab_covector(problem, &solver)?;
            let v_star = TestFunction42::ALL
                .iter()
                .map(|tf| compensated_sum(c.iter().zip(tf.values(space)).map(|(c, h)| c * h)).abs())
                .fold(0.0, f64::max);
            let d2_proxy = p * v_star;
            Ok(CountRow {
                lambda,
                p,
                count_tv,
                identity,
                rel_err: (count_tv - identity).abs() / identity,
                scaled: count_tv * lambda / p,
                d2_proxy,
                ratio: d2_proxy / count_tv,
            })
        })
        .collect()
}
