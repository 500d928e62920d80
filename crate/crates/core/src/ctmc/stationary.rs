//! Stationary distributions of conservative generators.
//!
//! The primary method is Grassmann–Taksar–Heyman (GTH) elimination in band
//! storage: states are censored from the highest index down, the removed
//! state's rates are redistributed over the remaining ones, and every pivot
//! is formed as a sum of positive rates, so no subtractive cancellation
//! occurs. Fill-in stays inside the original band, which keeps the cost at
//! `O(M * kl * ku)`.

use crate::error::{Error, Result};

use super::band::Band;
use super::generator::Generator;
use super::prob::ProbVec;

/// Band storage budget (entries) above which the power-iteration fallback is used.
pub const GTH_BAND_BUDGET: usize = 80_000_000;

/// Relative tolerance on `||π Q||_∞ / max rate`.
pub const STATIONARY_TOLERANCE: f64 = 1e-12;

/// Stationary distribution `π Q = 0`, `Σ π = 1` of an irreducible generator.
pub fn stationary(gen: &Generator) -> Result<ProbVec> {
    gen.ensure_irreducible()?;
    let (kl, ku) = gen.bandwidths();
    let pi = if Band::storage(gen.len(), kl, ku) <= GTH_BAND_BUDGET {
        gth(gen, kl, ku)?
    } else {
        power_iteration(gen, 1e-15, 2_000_000)?
    };
    let residual = stationary_residual(gen, &pi);
    let scale = gen.max_exit_rate().max(f64::MIN_POSITIVE);
    if residual > STATIONARY_TOLERANCE * scale {
        return Err(Error::Residual {
            residual: residual / scale,
            tol: STATIONARY_TOLERANCE,
        });
    }
    ProbVec::new(gen.key().clone(), pi)
}

/// `||π Q||_∞`.
pub fn stationary_residual(gen: &Generator, pi: &[f64]) -> f64 {
    gen.left_apply(pi).iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub(crate) fn gth(gen: &Generator, kl: usize, ku: usize) -> Result<Vec<f64>> {
    let n = gen.len();
    if n == 1 {
        return Ok(vec![1.0]);
    }
    let mut band = Band::zeros(n, kl, ku);
    for i in 0..n {
        for (j, r) in gen.row(i) {
            band.add(i, j, r);
        }
    }
    let mut outflow = vec![0.0; n];
    let mut row = Vec::with_capacity(kl);
    for m in (1..n).rev() {
        let lo = m.saturating_sub(kl);
        row.clear();
        row.extend_from_slice(band.row_slice(m, lo, m - 1));
        let s: f64 = row.iter().sum();
        if !(s > 0.0) {
            return Err(Error::Singular { state: m, pivot: s });
        }
        outflow[m] = s;
        for i in m.saturating_sub(ku)..m {
            let a = band.get(i, m);
            if a == 0.0 {
                continue;
            }
            let f = a / s;
            let dst = band.row_slice_mut(i, lo, m - 1);
            for (k, (d, r)) in dst.iter_mut().zip(&row).enumerate() {
                if lo + k != i {
                    *d += f * r;
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    x[0] = 1.0;
    for m in 1..n {
        let lo = m.saturating_sub(ku);
        let acc: f64 = (lo..m).map(|i| x[i] * band.get(i, m)).sum();
        x[m] = acc / outflow[m];
    }
    let total: f64 = x.iter().sum();
    for v in &mut x {
        *v /= total;
    }
    Ok(x)
}

/// Power iteration on the uniformised chain `P = I + Q / Λ`.
pub(crate) fn power_iteration(gen: &Generator, tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = gen.len();
    let uniform = 1.05 * gen.max_exit_rate();
    if !(uniform > 0.0) {
        return Err(Error::Singular { state: 0, pivot: 0.0 });
    }
    let exit: Vec<f64> = (0..n).map(|i| gen.exit_rate(i)).collect();
    let mut x = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    for _ in 0..max_iter {
        for (j, v) in next.iter_mut().enumerate() {
            *v = x[j] * (1.0 - exit[j] / uniform);
        }
        for (i, &xi) in x.iter().enumerate() {
            for (j, r) in gen.row(i) {
                next[j] += xi * r / uniform;
            }
        }
        let total: f64 = next.iter().sum();
        let mut change = 0.0;
        for (a, b) in x.iter_mut().zip(&next) {
            let v = b / total;
            change += (v - *a).abs();
            *a = v;
        }
        if change < tol {
            return Ok(x);
        }
    }
    Err(Error::NoConvergence(max_iter))
}
