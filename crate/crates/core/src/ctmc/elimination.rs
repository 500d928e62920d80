//! Subtraction-free elimination for generator systems with one pinned state.
//!
//! Removing the row and column of a pinned state `r` from `-Q` leaves a
//! nonsingular M-matrix `M` whose row sums are the rates into `r`. Gaussian
//! elimination is carried out on the off-diagonal rates, with each pivot
//! formed as the sum of the remaining outgoing rates plus the accumulated
//! rate into `r`, GTH style. Pinning a high-probability state keeps `M^{-1}`
//! of the order of the mean hitting time of that state.

use crate::error::{Error, Result};

use super::band::Band;
use super::generator::Generator;
use super::prob::{ProbVec, SteinSolution};
use super::stationary::stationary;

/// Relative residual tolerance for Stein solutions.
pub const STEIN_TOLERANCE: f64 = 1e-9;

/// Relative tolerance on `<π, rhs>` accepted as centred.
pub const CENTERING_TOLERANCE: f64 = 1e-9;

/// LU factors of `M = -Q` with the pinned state removed.
#[derive(Debug, Clone)]
pub(crate) struct Elimination {
    pinned: usize,
    m: usize,
    band: Band,
    pivot: Vec<f64>,
}

impl Elimination {
    pub(crate) fn new(gen: &Generator, pinned: usize) -> Result<Self> {
        let n = gen.len();
        if pinned >= n {
            return Err(Error::OutOfRange(format!("pinned state {pinned} of {n}")));
        }
        let m = n - 1;
        let (kl, ku) = gen.bandwidths();
        let mut band = Band::zeros(m, kl, ku);
        let mut kill = vec![0.0; m];
        let sub = |i: usize| if i < pinned { i } else { i - 1 };
        for i in (0..n).filter(|&i| i != pinned) {
            for (j, r) in gen.row(i) {
                if j == pinned {
                    kill[sub(i)] += r;
                } else {
                    band.add(sub(i), sub(j), r);
                }
            }
        }
        let mut pivot = vec![0.0; m];
        let mut row = Vec::with_capacity(ku);
        for k in 0..m {
            let hi = (k + ku).min(m.saturating_sub(1));
            row.clear();
            if hi > k {
                row.extend_from_slice(band.row_slice(k, k + 1, hi));
            }
            let d = row.iter().sum::<f64>() + kill[k];
            if !(d > 0.0) {
                return Err(Error::Singular { state: k, pivot: d });
            }
            pivot[k] = d;
            let kk = kill[k];
            for i in k + 1..=(k + kl).min(m.saturating_sub(1)) {
                let a = band.get(i, k);
                if a == 0.0 {
                    continue;
                }
                let f = a / d;
                if hi > k {
                    let dst = band.row_slice_mut(i, k + 1, hi);
                    for (c, (x, r)) in dst.iter_mut().zip(&row).enumerate() {
                        if k + 1 + c != i {
                            *x += f * r;
                        }
                    }
                }
                kill[i] += f * kk;
            }
        }
        Ok(Self {
            pinned,
            m,
            band,
            pivot,
        })
    }

    /// Solves `M x = b` in place (indices exclude the pinned state).
    pub(crate) fn solve(&self, b: &mut [f64]) {
        let (m, kl, ku) = (self.m, self.band.kl(), self.band.ku());
        for k in 0..m {
            let y = b[k] / self.pivot[k];
            if y == 0.0 {
                continue;
            }
            for i in k + 1..=(k + kl).min(m - 1) {
                b[i] += self.band.get(i, k) * y;
            }
        }
        for k in (0..m).rev() {
            let hi = (k + ku).min(m - 1);
            let mut acc = b[k];
            if hi > k {
                acc += self
                    .band
                    .row_slice(k, k + 1, hi)
                    .iter()
                    .zip(&b[k + 1..=hi])
                    .map(|(r, x)| r * x)
                    .sum::<f64>();
            }
            b[k] = acc / self.pivot[k];
        }
    }

    /// Solves `M^T x = c` in place.
    pub(crate) fn solve_transpose(&self, c: &mut [f64]) {
        let (m, kl, ku) = (self.m, self.band.kl(), self.band.ku());
        for k in 0..m {
            let lo = k.saturating_sub(ku);
            let acc: f64 = (lo..k).map(|i| self.band.get(i, k) * c[i]).sum();
            c[k] = (c[k] + acc) / self.pivot[k];
        }
        for k in (0..m).rev() {
            let hi = (k + kl).min(m - 1);
            let acc: f64 = (k + 1..=hi).map(|i| self.band.get(i, k) * c[i]).sum();
            c[k] += acc / self.pivot[k];
        }
    }

    pub(crate) fn restrict(&self, full: &[f64]) -> Vec<f64> {
        full.iter()
            .enumerate()
            .filter(|&(i, _)| i != self.pinned)
            .map(|(_, &v)| v)
            .collect()
    }

    pub(crate) fn extend(&self, sub: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(sub.len() + 1);
        out.extend_from_slice(&sub[..self.pinned]);
        out.push(0.0);
        out.extend_from_slice(&sub[self.pinned..]);
        out
    }
}

/// Solves Stein equations `A g = rhs` for a fixed generator `A`.
///
/// Solutions are pinned to zero at state 0 (the empty configuration or the
/// origin); every difference functional is independent of that choice.
#[derive(Debug, Clone)]
pub struct SteinSolver {
    gen: Generator,
    pi: ProbVec,
    elim: Elimination,
    max_rate: f64,
}

impl SteinSolver {
    pub fn new(gen: &Generator) -> Result<Self> {
        let pi = stationary(gen)?;
        Self::with_stationary(gen, pi)
    }

    /// Uses a known stationary law of `gen` (e.g. a truncated Poisson law).
    pub fn with_stationary(gen: &Generator, pi: ProbVec) -> Result<Self> {
        if pi.key() != gen.key() || pi.len() != gen.len() {
            return Err(Error::SpaceMismatch {
                left: gen.key().to_string(),
                right: pi.key().to_string(),
            });
        }
        gen.ensure_irreducible()?;
        let elim = Elimination::new(gen, pi.argmax())?;
        Ok(Self {
            max_rate: gen.max_exit_rate(),
            gen: gen.clone(),
            pi,
            elim,
        })
    }

    pub fn generator(&self) -> &Generator {
        &self.gen
    }

    pub fn stationary(&self) -> &ProbVec {
        &self.pi
    }

    /// Solves `A g = rhs` for a centred right-hand side.
    pub fn solve(&self, rhs: &[f64]) -> Result<SteinSolution> {
        assert_eq!(rhs.len(), self.gen.len(), "rhs length mismatch");
        let scale = rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mean = self.pi.expect(rhs);
        if mean.abs() > CENTERING_TOLERANCE * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::NotCentered {
                mean,
                tol: CENTERING_TOLERANCE * scale,
            });
        }
        let centred: Vec<f64> = rhs.iter().map(|v| v - mean).collect();
        let mut b: Vec<f64> = self.elim.restrict(&centred).iter().map(|v| -v).collect();
        self.elim.solve(&mut b);
        let mut g = self.elim.extend(&b);
        let g0 = g[0];
        for v in &mut g {
            *v -= g0;
        }
        let residual = self.relative_residual(&g, &centred);
        if residual > STEIN_TOLERANCE {
            return Err(Error::Residual {
                residual,
                tol: STEIN_TOLERANCE,
            });
        }
        Ok(SteinSolution::new(self.gen.key().clone(), g, 0, residual))
    }

    /// Solves `A g = h - E_π h`.
    pub fn solve_test_function(&self, h: &[f64]) -> Result<SteinSolution> {
        let mean = self.pi.expect(h);
        let rhs: Vec<f64> = h.iter().map(|v| v - mean).collect();
        self.solve(&rhs)
    }

    /// Representer of a difference functional: returns `c` such that
    /// `ℓ(g_h) = Σ_w c_w h(w)` for every test function `h`, where `g_h`
    /// solves `A g = h - E_π h`. The functional's coefficients must sum to zero.
    pub fn covector(&self, functional: &[(usize, f64)]) -> Result<Vec<f64>> {
        let total: f64 = functional.iter().map(|e| e.1).sum();
        let size: f64 = functional.iter().map(|e| e.1.abs()).sum();
        if total.abs() > 1e-12 * size {
            return Err(Error::InvalidParameter(
                "difference functional must annihilate constants".into(),
            ));
        }
        let n = self.gen.len();
        let mut ell = vec![0.0; n];
        for &(i, c) in functional {
            if i >= n {
                return Err(Error::OutOfRange(format!("functional index {i} of {n}")));
            }
            ell[i] += c;
        }
        let mut y = self.elim.restrict(&ell);
        self.elim.solve_transpose(&mut y);
        let y = self.elim.extend(&y);
        let s: f64 = y.iter().sum();
        Ok(y
            .iter()
            .zip(self.pi.values())
            .map(|(yw, pw)| -yw + pw * s)
            .collect())
    }

    fn relative_residual(&self, g: &[f64], rhs: &[f64]) -> f64 {
        let ag = self.gen.apply(g);
        let res = ag.iter().zip(rhs).fold(0.0f64, |m, (a, r)| m.max((a - r).abs()));
        let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let rmax = rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let scale = rmax + self.max_rate * gmax;
        if scale == 0.0 {
            0.0
        } else {
            res / scale
        }
    }
}

/// Solves `A g = rhs` for the generator `gen`, computing its stationary law.
pub fn solve_stein(gen: &Generator, rhs: &[f64]) -> Result<SteinSolution> {
    SteinSolver::new(gen)?.solve(rhs)
}

/// Stationary law of a perturbed generator together with its exact
/// difference from the stationary law of the base generator.
#[derive(Debug, Clone)]
pub struct PerturbedStationary {
    pub pi: ProbVec,
    /// `π_perturbed - π_base`, computed without cancellation.
    pub delta: Vec<f64>,
}

impl PerturbedStationary {
    /// `d_TV = ½ Σ |π_perturbed - π_base|`.
    pub fn tv(&self) -> f64 {
        0.5 * self.delta.iter().map(|d| d.abs()).sum::<f64>()
    }
}

/// Computes `π' - π` for `π' Q' = 0` from `(π' - π) Q' = -π (Q' - Q)`.
///
/// `base_pi` must be stationary for `base`. The right-hand side is
/// assembled from the exact rate differences, so the result keeps full
/// relative accuracy even when `π' - π` is many orders of magnitude below
/// the entries of `π`.
pub fn perturbed_stationary(
    perturbed: &Generator,
    base: &Generator,
    base_pi: &ProbVec,
) -> Result<PerturbedStationary> {
    if base_pi.key() != base.key() {
        return Err(Error::SpaceMismatch {
            left: base.key().to_string(),
            right: base_pi.key().to_string(),
        });
    }
    let diffs = perturbed.row_differences(base)?;
    let pi = stationary(perturbed)?;
    let n = perturbed.len();
    let mut r = vec![0.0; n];
    for (i, row) in &diffs {
        let p = base_pi.get(*i);
        for &(j, d) in row {
            r[j] -= p * d;
        }
    }
    let elim = Elimination::new(perturbed, pi.argmax())?;
    let mut b: Vec<f64> = elim.restrict(&r).iter().map(|v| -v).collect();
    elim.solve_transpose(&mut b);
    let mut delta = elim.extend(&b);
    let s: f64 = delta.iter().sum();
    for (d, p) in delta.iter_mut().zip(pi.values()) {
        *d -= s * p;
    }
    Ok(PerturbedStationary { pi, delta })
}
