//! Total variation, the configuration metric `d1` and the `d2` metric
//! between laws of point configurations.

mod hungarian;
mod transport;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ctmc::ProbVec;
use crate::error::{Error, Result};
use crate::state_space::{Carrier, ConfigSpace, StateSpace};

pub use hungarian::hungarian;
pub use transport::{transport, TransportPlan, COST_SCALE};

/// Largest configuration space accepted by [`d2_exact`].
pub const D2_EXACT_GUARD: usize = 3_000;

/// Largest configuration space checked over all pairs by [`lipschitz_check`].
pub const EXHAUSTIVE_LIPSCHITZ_STATES: usize = 5_000;

/// Pairs drawn at random by [`lipschitz_check`] above the exhaustive size.
pub const SAMPLED_LIPSCHITZ_PAIRS: usize = 2_000_000;

/// `d_TV(p, q) = ½ Σ |p - q|`.
pub fn tv(p: &ProbVec, q: &ProbVec) -> Result<f64> {
    p.check_same_space(q)?;
    Ok(half_l1(p.values().iter().zip(q.values()).map(|(a, b)| a - b)))
}

/// `½ Σ |x|` of a signed vector, typically an exact difference of laws.
pub fn half_l1(diff: impl IntoIterator<Item = f64>) -> f64 {
    0.5 * diff.into_iter().map(f64::abs).sum::<f64>()
}

/// The configuration metric: `1` if the totals differ, otherwise the
/// cheapest matching of the points under `d0` divided by the common total.
/// Two empty configurations are at distance `0`.
pub fn d1(xi: &[u32], eta: &[u32], carrier: &Carrier) -> f64 {
    debug_assert_eq!(xi.len(), carrier.points());
    debug_assert_eq!(eta.len(), carrier.points());
    let n: u32 = xi.iter().sum();
    if n != eta.iter().sum::<u32>() {
        return 1.0;
    }
    if n == 0 {
        return 0.0;
    }
    // common points are matched to themselves; d0 is a metric
    let mut from = Vec::new();
    let mut to = Vec::new();
    for (alpha, (&x, &y)) in xi.iter().zip(eta).enumerate() {
        if x > y {
            from.extend(std::iter::repeat_n(alpha, (x - y) as usize));
        } else if y > x {
            to.extend(std::iter::repeat_n(alpha, (y - x) as usize));
        }
    }
    let r = from.len();
    if r == 0 {
        return 0.0;
    }
    if carrier.is_discrete() {
        return r as f64 / n as f64;
    }
    let cost: Vec<f64> = from
        .iter()
        .flat_map(|&a| to.iter().map(move |&b| carrier.d0(a, b)))
        .collect();
    hungarian(r, &cost).0 / n as f64
}

/// Exact `d2` with its transport certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct D2Report {
    pub value: f64,
    pub dual: f64,
    pub gap: f64,
}

/// Optimal transport distance between `P` and `Q` under the ground cost
/// `d1`, which by duality is `sup_{h in H2} |E_P h - E_Q h|`.
pub fn d2_exact(p: &ProbVec, q: &ProbVec, space: &ConfigSpace) -> Result<D2Report> {
    p.check_same_space(q)?;
    let diff: Vec<f64> = p.values().iter().zip(q.values()).map(|(a, b)| a - b).collect();
    d2_signed(&diff, space)
}

/// `sup_{h in H2} Σ_ξ c(ξ) h(ξ)` for a signed measure `c` of total zero,
/// i.e. the transport cost from `c⁺` to `c⁻` under `d1`.
pub fn d2_signed(c: &[f64], space: &ConfigSpace) -> Result<D2Report> {
    if space.len() > D2_EXACT_GUARD {
        return Err(Error::TransportTooLarge {
            states: space.len(),
            guard: D2_EXACT_GUARD,
        });
    }
    if c.len() != space.len() {
        return Err(Error::InvalidParameter(format!(
            "signed measure has {} entries for {} states",
            c.len(),
            space.len()
        )));
    }
    let pos: Vec<usize> = (0..c.len()).filter(|&i| c[i] > 0.0).collect();
    let neg: Vec<usize> = (0..c.len()).filter(|&i| c[i] < 0.0).collect();
    let supply: Vec<f64> = pos.iter().map(|&i| c[i]).collect();
    let demand: Vec<f64> = neg.iter().map(|&i| -c[i]).collect();
    let carrier = space.carrier();
    let plan = transport(&supply, &demand, |i, j| d1(space.state(pos[i]), space.state(neg[j]), carrier))?;
    Ok(D2Report {
        value: plan.cost,
        dual: plan.dual,
        gap: plan.gap,
    })
}

/// `|E_P h - E_Q h|` for a test function `h` that passes [`lipschitz_check`].
pub fn d2_lower_bound(p: &ProbVec, q: &ProbVec, h: &[f64], space: &ConfigSpace) -> Result<f64> {
    p.check_same_space(q)?;
    let report = lipschitz_check(h, space);
    if !report.member {
        let (left, right) = report.worst_pair;
        return Err(Error::NotLipschitz {
            left,
            right,
            gap: report.worst_gap,
            d1: report.worst_d1,
        });
    }
    Ok((p.expect(h) - q.expect(h)).abs())
}

/// Outcome of a Lipschitz test against `d1`.
#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzReport {
    pub member: bool,
    /// Pair with the largest `|h(ξ) - h(η)| / d1(ξ, η)`.
    pub worst_pair: (usize, usize),
    pub worst_ratio: f64,
    pub worst_gap: f64,
    pub worst_d1: f64,
    /// Whether every pair was examined.
    pub exhaustive: bool,
}

/// Checks `|h(η) - h(ξ)| <= d1(ξ, η)` for all pairs of states.
///
/// Spaces with more than [`EXHAUSTIVE_LIPSCHITZ_STATES`] states are
/// checked exactly across different totals, on all single-move neighbour
/// pairs, and on [`SAMPLED_LIPSCHITZ_PAIRS`] random pairs of equal total.
pub fn lipschitz_check(h: &[f64], space: &ConfigSpace) -> LipschitzReport {
    assert_eq!(h.len(), space.len(), "test function length mismatch");
    let carrier = space.carrier();
    let mut report = LipschitzReport {
        member: true,
        worst_pair: (0, 0),
        worst_ratio: 0.0,
        worst_gap: 0.0,
        worst_d1: 0.0,
        exhaustive: space.len() <= EXHAUSTIVE_LIPSCHITZ_STATES,
    };
    let mut visit = |i: usize, j: usize| {
        if i == j {
            return;
        }
        let gap = (h[i] - h[j]).abs();
        let dist = d1(space.state(i), space.state(j), carrier);
        let ratio = if dist > 0.0 { gap / dist } else if gap > 0.0 { f64::INFINITY } else { 0.0 };
        if ratio > report.worst_ratio {
            report.worst_ratio = ratio;
            report.worst_pair = (i, j);
            report.worst_gap = gap;
            report.worst_d1 = dist;
        }
    };
    let n = space.len();
    if report.exhaustive {
        for i in 0..n {
            for j in i + 1..n {
                visit(i, j);
            }
        }
    } else {
        let moves = space.moves();
        for i in 0..n {
            for &mv in &moves {
                if let Some(j) = space.neighbor(i, mv) {
                    visit(i, j);
                }
            }
        }
        let mut by_total: Vec<Vec<usize>> = vec![Vec::new(); space.n_total_max() as usize + 1];
        for i in 0..n {
            by_total[space.total(i) as usize].push(i);
        }
        // pairs of different totals are at distance 1: compare level extremes
        let extremes: Vec<Option<(usize, usize)>> = by_total
            .iter()
            .map(|level| {
                let lo = level.iter().copied().min_by(|&a, &b| h[a].total_cmp(&h[b]))?;
                let hi = level.iter().copied().max_by(|&a, &b| h[a].total_cmp(&h[b]))?;
                Some((lo, hi))
            })
            .collect();
        for (l, el) in extremes.iter().enumerate() {
            for em in extremes.iter().skip(l + 1) {
                if let (Some((lo1, hi1)), Some((lo2, hi2))) = (el, em) {
                    visit(*hi1, *lo2);
                    visit(*hi2, *lo1);
                }
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        for _ in 0..SAMPLED_LIPSCHITZ_PAIRS {
            let level = &by_total[rng.gen_range(0..by_total.len())];
            if level.len() < 2 {
                continue;
            }
            visit(level[rng.gen_range(0..level.len())], level[rng.gen_range(0..level.len())]);
        }
    }
    report.member = report.worst_ratio <= 1.0 + 1e-12;
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state_space::SpaceKey;
    use proptest::prelude::*;

    fn pv(values: Vec<f64>) -> ProbVec {
        ProbVec::new(SpaceKey::new("t"), values).unwrap()
    }

    #[test]
    fn tv_basics() {
        let p = pv(vec![0.5, 0.5, 0.0]);
        let q = pv(vec![0.0, 0.0, 1.0]);
        assert_eq!(tv(&p, &p).unwrap(), 0.0);
        assert_eq!(tv(&p, &q).unwrap(), 1.0);
        let other = ProbVec::new(SpaceKey::new("u"), vec![0.5, 0.5, 0.0]).unwrap();
        assert!(matches!(tv(&p, &other), Err(Error::SpaceMismatch { .. })));
    }

    #[test]
    fn d1_examples() {
        let c = Carrier::new(1, 4.0).unwrap();
        let (x, a, b) = (0, c.a(), c.b());
        let conf = |pts: &[usize]| {
            let mut v = vec![0u32; c.points()];
            for &p in pts {
                v[p] += 1;
            }
            v
        };
        assert_eq!(d1(&conf(&[a]), &conf(&[b]), &c), 1.0);
        assert_eq!(d1(&conf(&[a, x]), &conf(&[b, x]), &c), 0.5);
        assert_eq!(d1(&conf(&[a, x]), &conf(&[a, x]), &c), 0.0);
        assert_eq!(d1(&conf(&[]), &conf(&[]), &c), 0.0);
        assert_eq!(d1(&conf(&[]), &conf(&[x]), &c), 1.0);
        assert_eq!(d1(&conf(&[x, x, a]), &conf(&[x, b]), &c), 1.0);
    }

    #[test]
    fn d1_with_geometry_inside_s() {
        // three points of S on a line: 0, 0.25, 0.5
        let d = [0.0, 0.25, 0.5, 0.25, 0.0, 0.25, 0.5, 0.25, 0.0];
        let c = Carrier::with_metric(3, 5.0, &d).unwrap();
        assert_eq!(d1(&[1, 0, 0, 0, 0], &[0, 1, 0, 0, 0], &c), 0.25);
        assert_eq!(d1(&[2, 0, 0, 0, 0], &[0, 1, 1, 0, 0], &c), 0.375);
        assert_eq!(d1(&[1, 0, 1, 0, 0], &[0, 0, 1, 1, 0], &c), 0.5);
    }

    #[test]
    fn d2_of_diracs_is_d1() {
        let c = Carrier::new(1, 4.0).unwrap();
        let space = ConfigSpace::new(c.clone(), 4, 2).unwrap();
        let i = space.config_of(&[c.a(), 0]).unwrap();
        let j = space.config_of(&[c.b(), 0]).unwrap();
        let mut p = vec![0.0; space.len()];
        let mut q = vec![0.0; space.len()];
        p[i] = 1.0;
        q[j] = 1.0;
        let (p, q) = (
            ProbVec::new(space.key(), p).unwrap(),
            ProbVec::new(space.key(), q).unwrap(),
        );
        assert!((d2_exact(&p, &q, &space).unwrap().value - 0.5).abs() < 1e-15);
        assert_eq!(d2_exact(&p, &p, &space).unwrap().value, 0.0);
    }

    #[test]
    fn non_lipschitz_function_has_a_witness() {
        let space = ConfigSpace::new(Carrier::new(1, 4.0).unwrap(), 5, 2).unwrap();
        let h: Vec<f64> = (0..space.len()).map(|i| 2.0 * space.total(i) as f64).collect();
        let r = lipschitz_check(&h, &space);
        assert!(!r.member && r.exhaustive);
        assert!(r.worst_ratio >= 2.0);
        let constant = vec![0.3; space.len()];
        assert!(lipschitz_check(&constant, &space).member);
    }

    #[test]
    fn d2_exceeds_every_lipschitz_lower_bound() {
        let space = ConfigSpace::new(Carrier::new(1, 4.0).unwrap(), 5, 2).unwrap();
        let n = space.len();
        let p = ProbVec::from_weights(space.key(), (0..n).map(|i| 1.0 + (i % 3) as f64).collect()).unwrap();
        let q = ProbVec::from_weights(space.key(), (0..n).map(|i| 1.0 + (i % 5) as f64).collect()).unwrap();
        let exact = d2_exact(&p, &q, &space).unwrap();
        assert!(exact.gap < 1e-9);
        let h: Vec<f64> = (0..n).map(|i| 0.5 * space.total(i).min(2) as f64).collect();
        let lower = d2_lower_bound(&p, &q, &h, &space).unwrap();
        assert!(lower <= exact.value + 1e-12);
        assert!(exact.value <= 1.0);
    }

    #[test]
    fn d2_guard() {
        let space = ConfigSpace::new(Carrier::new(1, 30.0).unwrap(), 120, 6).unwrap();
        assert!(space.len() > D2_EXACT_GUARD);
        let c = vec![0.0; space.len()];
        assert!(matches!(d2_signed(&c, &space), Err(Error::TransportTooLarge { .. })));
    }

    fn configs(points: usize) -> impl Strategy<Value = (Vec<u32>, Vec<u32>, Vec<u32>)> {
        (1u32..6).prop_flat_map(move |n| {
            let one = move || proptest::collection::vec(0usize..points, n as usize).prop_map(move |pts| {
                let mut v = vec![0u32; points];
                for p in pts {
                    v[p] += 1;
                }
                v
            });
            (one(), one(), one())
        })
    }

    proptest! {
        #[test]
        fn d1_triangle_inequality((x, y, z) in configs(5)) {
            let d = [0.0, 0.3, 0.6, 0.3, 0.0, 0.4, 0.6, 0.4, 0.0];
            let c = Carrier::with_metric(3, 5.0, &d).unwrap();
            let (xy, yz, xz) = (d1(&x, &y, &c), d1(&y, &z, &c), d1(&x, &z, &c));
            prop_assert!(xz <= xy + yz + 1e-12);
            prop_assert!(xy <= 1.0 && (xy - d1(&y, &x, &c)).abs() < 1e-15);
        }

        #[test]
        fn tv_triangle_inequality(w in proptest::collection::vec(proptest::collection::vec(0.01f64..1.0, 6), 3)) {
            let key = SpaceKey::new("six");
            let ps: Vec<ProbVec> = w.into_iter().map(|v| ProbVec::from_weights(key.clone(), v).unwrap()).collect();
            let (a, b, c) = (&ps[0], &ps[1], &ps[2]);
            prop_assert!(tv(a, c).unwrap() <= tv(a, b).unwrap() + tv(b, c).unwrap() + 1e-15);
            prop_assert_eq!(tv(a, b).unwrap(), tv(b, a).unwrap());
        }
    }
}
