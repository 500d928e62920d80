//! Multivariate Poisson approximation on a lattice box: the
//! immigration-death Stein operator, mixed second differences, and the
//! process perturbed at `K + ε1` and `K + ε2`.
//!
//! Coordinates are numbered from 0 here; the first two coordinates carry
//! the symmetric perturbation.

use rayon::prelude::*;

use crate::ctmc::{perturbed_stationary, Generator, PerturbedStationary, ProbVec, SteinSolver};
use crate::error::{Error, Result};
use crate::poisson_uni::poisson_weights;
use crate::state_space::{default_box_n_max, BoxSpace, Move, StateSpace, DEFAULT_MAX_STATES};
use crate::sum::compensated_sum;

/// `log⁺ x = max(log x, 0)`.
pub fn log_plus(x: f64) -> f64 {
    x.ln().max(0.0)
}

#[derive(Debug, Clone)]
pub struct MultiProblem {
    lambda: f64,
    mu: Vec<f64>,
    corner: Vec<u32>,
    space: BoxSpace,
}

impl MultiProblem {
    pub fn new(lambda: f64, mu: Vec<f64>) -> Result<Self> {
        Self::with_max_states(lambda, mu, DEFAULT_MAX_STATES)
    }

    /// Default truncation with an explicit cap on the number of states.
    pub fn with_max_states(lambda: f64, mu: Vec<f64>, max_states: usize) -> Result<Self> {
        check_parameters(lambda, &mu)?;
        let space = BoxSpace::with_max_states(default_box_n_max(lambda, &mu), max_states)?;
        Self::with_space(lambda, mu, space)
    }

    /// `d = 2`, `μ = (½, ½)`.
    pub fn symmetric(lambda: f64, max_states: usize) -> Result<Self> {
        Self::with_max_states(lambda, vec![0.5, 0.5], max_states)
    }

    pub fn with_space(lambda: f64, mu: Vec<f64>, space: BoxSpace) -> Result<Self> {
        check_parameters(lambda, &mu)?;
        if space.dim() != mu.len() {
            return Err(Error::InvalidParameter(format!(
                "box has dimension {} but μ has {} entries",
                space.dim(),
                mu.len()
            )));
        }
        let corner: Vec<u32> = mu.iter().map(|m| (lambda * m).floor() as u32).collect();
        for (i, (&k, &n)) in corner.iter().zip(space.n_max()).enumerate() {
            let margin = if i < 2 { 2 } else { 0 };
            if k + margin > n {
                return Err(Error::OutOfRange(format!(
                    "corner coordinate {i} = {k} needs {margin} more levels below the truncation {n}"
                )));
            }
        }
        Ok(Self {
            lambda,
            mu,
            corner,
            space,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn space(&self) -> &BoxSpace {
        &self.space
    }

    /// `K = (⌊λμ_i⌋)_i`.
    pub fn corner(&self) -> &[u32] {
        &self.corner
    }

    /// Index of `K + Σ offsets`, where `offsets` lists coordinates to increment.
    pub fn corner_index(&self, offsets: &[usize]) -> usize {
        let mut w = self.corner.clone();
        for &i in offsets {
            w[i] += 1;
        }
        self.space.index_of(&w).expect("the corner has a margin of two in coordinates 0 and 1")
    }

    /// `(e / 32π) (μ1 ∧ μ2)^{-2}`, the smallest `λ` for the lower bound.
    pub fn lower_bound_threshold(&self) -> f64 {
        let m = self.mu[0].min(self.mu[1]);
        std::f64::consts::E / (32.0 * std::f64::consts::PI) / (m * m)
    }
}

fn check_parameters(lambda: f64, mu: &[f64]) -> Result<()> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!("λ must be positive, got {lambda}")));
    }
    if mu.len() < 2 {
        return Err(Error::InvalidParameter("μ needs at least two coordinates".into()));
    }
    if mu.iter().any(|&m| !(m > 0.0)) || (mu.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "μ must be a positive probability vector, got {mu:?}"
        )));
    }
    Ok(())
}

/// Birth rate `λμ_i` and death rate `w_i` in every coordinate.
pub fn multi_operator(problem: &MultiProblem) -> Result<Generator> {
    let rates: Vec<f64> = problem.mu.iter().map(|m| problem.lambda * m).collect();
    Generator::assemble(&problem.space, |_, s, mv| match mv {
        Move::Up(i) => rates[i],
        Move::Down(i) => s[i] as f64,
    })
}

/// The operator plus four rate-½ arrows: at `K + ε2` a birth in
/// coordinate 0 and a death in coordinate 1, and symmetrically at `K + ε1`.
pub fn perturbed_multi(problem: &MultiProblem) -> Result<Generator> {
    if problem.mu[0] != problem.mu[1] {
        return Err(Error::Symmetry(format!(
            "the perturbation needs μ1 = μ2, got {} and {}",
            problem.mu[0], problem.mu[1]
        )));
    }
    let rates: Vec<f64> = problem.mu.iter().map(|m| problem.lambda * m).collect();
    let k_e1 = problem.corner_index(&[0]);
    let k_e2 = problem.corner_index(&[1]);
    Generator::assemble(&problem.space, |i, s, mv| {
        let extra = match mv {
            Move::Up(0) | Move::Down(1) if i == k_e2 => 0.5,
            Move::Up(1) | Move::Down(0) if i == k_e1 => 0.5,
            _ => 0.0,
        };
        extra
            + match mv {
                Move::Up(c) => rates[c],
                Move::Down(c) => s[c] as f64,
            }
    })
}

/// The product of truncated `Po(λμ_i)` laws, stationary for [`multi_operator`].
pub fn product_poisson(problem: &MultiProblem) -> Result<ProbVec> {
    let marginals: Vec<Vec<f64>> = problem
        .mu
        .iter()
        .zip(problem.space.n_max())
        .map(|(m, &n)| {
            let w = poisson_weights(problem.lambda * m, n);
            let z: f64 = w.iter().sum();
            w.into_iter().map(|x| x / z).collect()
        })
        .collect();
    let space = &problem.space;
    let values = (0..space.len())
        .map(|i| {
            space
                .state(i)
                .iter()
                .zip(&marginals)
                .map(|(&w, m)| m[w as usize])
                .product()
        })
        .collect();
    ProbVec::from_weights(space.key(), values)
}

/// `Δ_ij g(w) = g(w + ε_i + ε_j) - g(w + ε_i) - g(w + ε_j) + g(w)`.
pub fn delta_ij(space: &BoxSpace, g: &[f64], w: &[u32], i: usize, j: usize) -> Result<f64> {
    let at = |offsets: &[usize]| -> Result<f64> {
        let mut v = w.to_vec();
        for &c in offsets {
            v[c] += 1;
        }
        space
            .index_of(&v)
            .map(|x| g[x])
            .ok_or_else(|| Error::OutOfRange(format!("{v:?} lies outside the box")))
    };
    Ok(at(&[i, j])? - at(&[i])? - at(&[j])? + at(&[])?)
}

/// Mixed difference in the first two coordinates.
pub fn delta12(space: &BoxSpace, g: &[f64], w: &[u32]) -> Result<f64> {
    delta_ij(space, g, w, 0, 1)
}

/// `(1 + 2 log⁺(2λ)) (μ1 + μ2) / (2λ μ1 μ2)`.
pub fn delta12_upper_bound(lambda: f64, mu1: f64, mu2: f64) -> f64 {
    (1.0 + 2.0 * log_plus(2.0 * lambda)) * (mu1 + mu2) / (2.0 * lambda * mu1 * mu2)
}

/// `log λ / (20 λ √(μ1 μ2))`.
pub fn delta12_lower_bound(lambda: f64, mu1: f64, mu2: f64) -> f64 {
    lambda.ln() / (20.0 * lambda * (mu1 * mu2).sqrt())
}

/// Indicator of `{w : w_0 <= m_0, w_1 <= m_1}`.
pub fn lower_quadrant(problem: &MultiProblem) -> Vec<f64> {
    quadrant(problem, false, false)
}

/// Indicator of the quadrant with corner `(m_0, m_1)`; `upper_i` selects
/// `w_i > m_i` instead of `w_i <= m_i`.
pub fn quadrant(problem: &MultiProblem, upper0: bool, upper1: bool) -> Vec<f64> {
    let k = &problem.corner;
    (0..problem.space.len())
        .map(|i| {
            let s = problem.space.state(i);
            let in0 = (s[0] > k[0]) == upper0;
            let in1 = (s[1] > k[1]) == upper1;
            if in0 && in1 {
                1.0
            } else {
                0.0
            }
        })
        .collect()
}

/// All four quadrants with corner `(m_0, m_1)`.
pub fn quadrant_family(problem: &MultiProblem) -> Vec<Vec<f64>> {
    [(false, false), (false, true), (true, false), (true, true)]
        .iter()
        .map(|&(a, b)| quadrant(problem, a, b))
        .collect()
}

fn base_solver(problem: &MultiProblem) -> Result<SteinSolver> {
    SteinSolver::with_stationary(&multi_operator(problem)?, product_poisson(problem)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowerBoundReport {
    pub lambda: f64,
    /// `|Δ12 g_{A1}(K)|`.
    pub computed: f64,
    pub bound: f64,
    /// Whether `λ` reaches the validity threshold.
    pub applicable: bool,
    pub ok: bool,
}

pub fn lower_bound_3_3(problem: &MultiProblem) -> Result<LowerBoundReport> {
    let solver = base_solver(problem)?;
    lower_bound_with(problem, &solver)
}

fn lower_bound_with(problem: &MultiProblem, solver: &SteinSolver) -> Result<LowerBoundReport> {
    let g = solver.solve_test_function(&lower_quadrant(problem))?;
    let computed = delta12(&problem.space, g.values(), &problem.corner)?.abs();
    let bound = delta12_lower_bound(problem.lambda, problem.mu[0], problem.mu[1]);
    let applicable = problem.lambda >= problem.lower_bound_threshold();
    Ok(LowerBoundReport {
        lambda: problem.lambda,
        computed,
        bound,
        applicable,
        ok: !applicable || computed >= bound,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpperBoundReport {
    /// `max_A max_w |Σ α_i α_j Δ_ij g_A(w)|` over the safe interior.
    pub lhs: f64,
    pub rhs: f64,
    pub ok: bool,
    /// Index into the family and state of the maximum.
    pub worst: Option<(usize, usize)>,
}

/// `min{(1 + 2 log⁺(2λ))/(2λ) Σ α_i²/μ_i, Σ α_i²}`.
pub fn quadratic_form_bound(lambda: f64, mu: &[f64], alpha: &[f64]) -> f64 {
    let weighted: f64 = alpha.iter().zip(mu).map(|(a, m)| a * a / m).sum();
    let plain: f64 = alpha.iter().map(|a| a * a).sum();
    ((1.0 + 2.0 * log_plus(2.0 * lambda)) / (2.0 * lambda) * weighted).min(plain)
}

/// Checks the uniform bound on `Σ α_i α_j Δ_ij g_A` for each indicator in
/// `family`, over states `w` with `w + 2ε_i` inside the box for all `i`.
pub fn upper_bound_3_1(problem: &MultiProblem, alpha: &[f64], family: &[Vec<f64>]) -> Result<UpperBoundReport> {
    let d = problem.dim();
    if alpha.len() != d {
        return Err(Error::InvalidParameter(format!("α has {} entries, expected {d}", alpha.len())));
    }
    let solver = base_solver(problem)?;
    let space = &problem.space;
    let mut lhs = 0.0f64;
    let mut worst = None;
    for (a, h) in family.iter().enumerate() {
        let g = solver.solve_test_function(h)?;
        for x in 0..space.len() {
            let w = space.state(x);
            if w.iter().zip(space.n_max()).any(|(&wi, &n)| wi + 2 > n) {
                continue;
            }
            let mut form = 0.0;
            for i in 0..d {
                for j in 0..d {
                    if alpha[i] != 0.0 && alpha[j] != 0.0 {
                        form += alpha[i] * alpha[j] * delta_ij(space, g.values(), w, i, j)?;
                    }
                }
            }
            if form.abs() > lhs {
                lhs = form.abs();
                worst = Some((a, x));
            }
        }
    }
    let rhs = quadratic_form_bound(problem.lambda, &problem.mu, alpha);
    Ok(UpperBoundReport {
        lhs,
        rhs,
        ok: lhs <= rhs,
        worst,
    })
}

/// Both sides of `E A g(W) = -P[W = K + ε1] Δ12 g(K)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultiIdentity {
    pub lhs: f64,
    pub rhs: f64,
    pub rel_err: f64,
}

/// `response` is the stationary law of [`perturbed_multi`] relative to the
/// product law. `lhs` is a compensated sum of `(π' - π)(w) (A g)(w)`, which
/// equals `E A g(W)` since `π A = 0`, and stays accurate when
/// `P[W = K + ε1]` is far below one.
pub fn verify_identity_3_5(
    problem: &MultiProblem,
    operator: &Generator,
    response: &PerturbedStationary,
    g: &[f64],
) -> Result<MultiIdentity> {
    let pi = &response.pi;
    if pi.key() != operator.key() {
        return Err(Error::SpaceMismatch {
            left: operator.key().to_string(),
            right: pi.key().to_string(),
        });
    }
    let ag = operator.apply(g);
    let lhs = compensated_sum(response.delta.iter().zip(&ag).map(|(d, a)| d * a));
    let p = pi.get(problem.corner_index(&[0]));
    let rhs = -p * delta12(&problem.space, g, &problem.corner)?;
    let diff = (lhs - rhs).abs();
    Ok(MultiIdentity {
        lhs,
        rhs,
        rel_err: if rhs != 0.0 { diff / rhs.abs() } else { diff },
    })
}

/// Everything computed for one `λ` of the multivariate sweep.
#[derive(Debug, Clone)]
pub struct MultiReport {
    pub lambda: f64,
    /// `d_TV(L(W), Po(λμ))` from the stationary difference.
    pub d_tv: f64,
    /// `P[W = K + ε1]`.
    pub p: f64,
    /// `sup_{h in H_TV} |Δ12 g_h(K)|` from one adjoint solve.
    pub sup: f64,
    /// `|d_tv - p sup| / d_tv`.
    pub rel_err: f64,
    /// `d_tv λ / (p log λ)`.
    pub scaled: f64,
    pub sandwich_lower: f64,
    pub sandwich_upper: f64,
    /// `max_w |π(w) - π(σ12 w)|`.
    pub swap_asymmetry: f64,
    /// `max_i |E W_i - λμ_i| / (λμ_i)`.
    pub mean_error: f64,
    pub lower_bound: LowerBoundReport,
    pub leak: f64,
    pub response: PerturbedStationary,
}

impl MultiReport {
    pub fn in_sandwich(&self) -> bool {
        self.sandwich_lower <= self.sup && self.sup <= self.sandwich_upper
    }
}

pub fn analyse_multi(problem: &MultiProblem) -> Result<MultiReport> {
    let base = multi_operator(problem)?;
    let base_pi = product_poisson(problem)?;
    let pert = perturbed_multi(problem)?;
    let response = perturbed_stationary(&pert, &base, &base_pi)?;
    let solver = SteinSolver::with_stationary(&base, base_pi)?;
    let ell = [
        (problem.corner_index(&[0, 1]), 1.0),
        (problem.corner_index(&[0]), -1.0),
        (problem.corner_index(&[1]), -1.0),
        (problem.corner_index(&[]), 1.0),
    ];
    let c = solver.covector(&ell)?;
    let sup = 0.5 * c.iter().map(|v| v.abs()).sum::<f64>();
    let d_tv = response.tv();
    let p = response.pi.get(problem.corner_index(&[0]));
    let lambda = problem.lambda;

    let space = &problem.space;
    let pi = response.pi.values();
    let mut swap_asymmetry = 0.0f64;
    let mut means = vec![0.0; problem.dim()];
    for x in 0..space.len() {
        let mut w = space.state(x).to_vec();
        for (m, &wi) in means.iter_mut().zip(&w) {
            *m += pi[x] * wi as f64;
        }
        w.swap(0, 1);
        if let Some(y) = space.index_of(&w) {
            swap_asymmetry = swap_asymmetry.max((pi[x] - pi[y]).abs());
        }
    }
    let mean_error = means
        .iter()
        .zip(&problem.mu)
        .map(|(m, mu)| (m - lambda * mu).abs() / (lambda * mu))
        .fold(0.0, f64::max);

    Ok(MultiReport {
        lambda,
        d_tv,
        p,
        sup,
        rel_err: (d_tv - p * sup).abs() / d_tv,
        scaled: d_tv * lambda / (p * lambda.ln()),
        sandwich_lower: delta12_lower_bound(lambda, problem.mu[0], problem.mu[1]),
        sandwich_upper: delta12_upper_bound(lambda, problem.mu[0], problem.mu[1]),
        swap_asymmetry,
        mean_error,
        lower_bound: lower_bound_with(problem, &solver)?,
        leak: pert.leak_under(&response.pi),
        response,
    })
}

/// [`analyse_multi`] over a grid, in grid order.
pub fn verify_rate_3_6(problems: &[MultiProblem]) -> Result<Vec<MultiReport>> {
    problems.par_iter().map(analyse_multi).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ctmc::{stationary, SteinSolution};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_g(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    #[test]
    fn operator_rates_and_stationary_law() {
        let problem = MultiProblem::new(2.0, vec![0.5, 0.5]).unwrap();
        let gen = multi_operator(&problem).unwrap();
        let origin = problem.space().index_of(&[0, 0]).unwrap();
        let rows: Vec<(usize, f64)> = gen.row(origin).collect();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|&(_, r)| r == 1.0));
        let pi = stationary(&gen).unwrap();
        let product = product_poisson(&problem).unwrap();
        for (a, b) in pi.values().iter().zip(product.values()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn mixed_differences() {
        let space = BoxSpace::new(vec![4, 4]).unwrap();
        let n = space.len();
        let key = space.key();
        let constant = SteinSolution::from_values(key.clone(), vec![3.0; n], 0);
        assert_eq!(delta12(&space, constant.values(), &[1, 1]).unwrap(), 0.0);
        let product: Vec<f64> = (0..n).map(|i| (space.state(i)[0] * space.state(i)[1]) as f64).collect();
        let first: Vec<f64> = (0..n).map(|i| space.state(i)[0] as f64).collect();
        for w in [[0u32, 0], [2, 1], [3, 3]] {
            assert_eq!(delta12(&space, &product, &w).unwrap(), 1.0);
            assert_eq!(delta12(&space, &first, &w).unwrap(), 0.0);
        }
        assert!(matches!(delta12(&space, &first, &[4, 0]), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn perturbation_arrows() {
        let problem = MultiProblem::new(8.0, vec![0.5, 0.5]).unwrap();
        let gen = perturbed_multi(&problem).unwrap();
        let base = multi_operator(&problem).unwrap();
        let k = problem.corner_index(&[]);
        let k1 = problem.corner_index(&[0]);
        let k2 = problem.corner_index(&[1]);
        let k12 = problem.corner_index(&[0, 1]);
        assert_eq!(gen.rate(k1, k12), 4.5);
        assert_eq!(gen.rate(k1, k), 5.5);
        assert_eq!(gen.rate(k2, k12), 4.5);
        assert_eq!(gen.rate(k2, k), 5.5);
        let diffs = gen.row_differences(&base).unwrap();
        let mut rows: Vec<usize> = diffs.iter().map(|d| d.0).collect();
        rows.sort_unstable();
        assert_eq!(rows, vec![k1.min(k2), k1.max(k2)]);
        let lopsided = MultiProblem::new(8.0, vec![0.6, 0.4]).unwrap();
        assert!(matches!(perturbed_multi(&lopsided), Err(Error::Symmetry(_))));
    }

    #[test]
    fn identity_on_random_functions() {
        let problem = MultiProblem::new(8.0, vec![0.5, 0.5]).unwrap();
        let operator = multi_operator(&problem).unwrap();
        let perturbed = perturbed_multi(&problem).unwrap();
        let pi = perturbed_stationary(&perturbed, &operator, &product_poisson(&problem).unwrap()).unwrap();
        let direct = stationary(&perturbed).unwrap();
        let n = problem.space().len();
        for seed in 0..50 {
            let g = random_g(n, seed);
            let r = verify_identity_3_5(&problem, &operator, &pi, &g).unwrap();
            assert!(r.rel_err <= 1e-8, "{r:?}");
            let plain: f64 = direct.values().iter().zip(operator.apply(&g)).map(|(p, a)| p * a).sum();
            assert!((plain - r.rhs).abs() <= 1e-8 * r.rhs.abs());
        }
        let c = verify_identity_3_5(&problem, &operator, &pi, &vec![1.5; n]).unwrap();
        assert_eq!((c.lhs.abs() < 1e-15, c.rhs), (true, -0.0));
        for i in 0..2 {
            let coord: Vec<f64> = (0..n).map(|x| problem.space().state(x)[i] as f64).collect();
            let r = verify_identity_3_5(&problem, &operator, &pi, &coord).unwrap();
            assert!(r.lhs.abs() < 1e-12, "{r:?}");
        }
    }

    #[test]
    fn report_at_lambda_eight() {
        let problem = MultiProblem::new(8.0, vec![0.5, 0.5]).unwrap();
        let r = analyse_multi(&problem).unwrap();
        assert!(r.rel_err <= 1e-8, "{}", r.rel_err);
        assert!(r.swap_asymmetry <= 1e-10);
        assert!(r.mean_error <= 1e-8);
        assert!(r.in_sandwich(), "{} not in [{}, {}]", r.sup, r.sandwich_lower, r.sandwich_upper);
        assert!(r.lower_bound.ok && r.lower_bound.applicable);
    }

    #[test]
    fn lower_bound_at_sixteen() {
        let problem = MultiProblem::new(16.0, vec![0.5, 0.5]).unwrap();
        let r = lower_bound_3_3(&problem).unwrap();
        assert!((r.bound - 16f64.ln() / 160.0).abs() < 1e-15);
        assert!(r.ok, "{r:?}");
        assert!((problem.lower_bound_threshold() - 0.10816).abs() < 1e-4);
    }

    #[test]
    fn quadratic_form_bound_holds_on_quadrants() {
        let problem = MultiProblem::new(8.0, vec![0.5, 0.5]).unwrap();
        let family = quadrant_family(&problem);
        for alpha in [[1.0, 1.0], [1.0, 0.0], [0.0, 1.0], [1.0, -1.0]] {
            let r = upper_bound_3_1(&problem, &alpha, &family).unwrap();
            assert!(r.ok, "{alpha:?}: {r:?}");
        }
        let zero = upper_bound_3_1(&problem, &[0.0, 0.0], &family).unwrap();
        assert_eq!((zero.lhs, zero.rhs, zero.ok), (0.0, 0.0, true));
        let l: f64 = 8.0;
        let expected = ((1.0 + 2.0 * (2.0 * l).ln()) * 2.0 / l).min(2.0);
        assert!((quadratic_form_bound(l, &[0.5, 0.5], &[1.0, 1.0]) - expected).abs() < 1e-15);
    }

    #[test]
    fn adjoint_sup_matches_exhaustive_subsets() {
        // 4 x 4 box, K = (0, 0)
        let space = BoxSpace::new(vec![3, 3]).unwrap();
        let problem = MultiProblem::with_space(1.0, vec![0.5, 0.5], space).unwrap();
        let n = problem.space().len();
        assert_eq!(n, 16);
        let r = analyse_multi(&problem).unwrap();
        let solver = base_solver(&problem).unwrap();
        let mut best = 0.0f64;
        for mask in 0u32..(1 << n) {
            let h: Vec<f64> = (0..n).map(|j| ((mask >> j) & 1) as f64).collect();
            let g = solver.solve_test_function(&h).unwrap();
            best = best.max(delta12(problem.space(), g.values(), problem.corner()).unwrap().abs());
        }
        assert!((r.sup - best).abs() < 1e-12, "{} vs {best}", r.sup);
        assert!(r.rel_err < 1e-10, "{r:?}");
    }

    #[test]
    fn three_dimensional_smoke() {
        let mu = vec![0.4, 0.4, 0.2];
        let space = BoxSpace::new(vec![14, 14, 9]).unwrap();
        let problem = MultiProblem::with_space(12.0, mu, space).unwrap();
        let r = analyse_multi(&problem).unwrap();
        assert!(r.rel_err <= 1e-8, "{}", r.rel_err);
        assert!(r.swap_asymmetry <= 1e-10);
        assert!(r.sup >= r.sandwich_lower && r.sup <= r.sandwich_upper);
        let operator = multi_operator(&problem).unwrap();
        for seed in 0..5 {
            let id = verify_identity_3_5(&problem, &operator, &r.response, &random_g(problem.space().len(), seed)).unwrap();
            assert!(id.rel_err <= 1e-8);
        }
        // other points with the same first two coordinates
        let solver = base_solver(&problem).unwrap();
        let g = solver.solve_test_function(&lower_quadrant(&problem)).unwrap();
        let k = problem.corner();
        for tail in [0u32, 4] {
            let v = delta12(problem.space(), g.values(), &[k[0], k[1], tail]).unwrap().abs();
            assert!(v >= delta12_lower_bound(12.0, 0.4, 0.4), "tail {tail}: {v}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn gauge_shift_invariance(c in -50.0f64..50.0, seed in 0u64..1000) {
            let space = BoxSpace::new(vec![6, 6]).unwrap();
            let g = random_g(space.len(), seed);
            let shifted: Vec<f64> = g.iter().map(|v| v + c).collect();
            for w in [[0u32, 0], [2, 3], [4, 4]] {
                for (i, j) in [(0, 1), (0, 0), (1, 1)] {
                    let a = delta_ij(&space, &g, &w, i, j).unwrap();
                    let b = delta_ij(&space, &shifted, &w, i, j).unwrap();
                    prop_assert!((a - b).abs() < 1e-12);
                }
            }
        }
    }
}
