//! Truncated state spaces with bijective state/index maps.
//!
//! Three families are supported: an interval `{0, ..., N}` of the integers,
//! a lattice box in `Z_+^d`, and finite point configurations over a
//! [`Carrier`] `S ∪ {a} ∪ {b}`. Every space stores its states as count
//! vectors in lexicographic order, first coordinate most significant.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Default cap on the number of enumerated states.
pub const DEFAULT_MAX_STATES: usize = 20_000;

/// Default cap on the number of points at each of `a` and `b`.
pub const DEFAULT_N_AB_MAX: u32 = 6;

/// Poisson mean plus twelve standard deviations plus twenty.
fn poisson_cap(mean: f64) -> u32 {
    (mean + 12.0 * mean.sqrt() + 20.0).ceil() as u32
}

/// Default univariate truncation level for `Po(lambda)`.
pub fn default_uni_n_max(lambda: f64) -> u32 {
    poisson_cap(lambda)
}

/// Default per-coordinate truncation for `Po(lambda * mu)`.
pub fn default_box_n_max(lambda: f64, mu: &[f64]) -> Vec<u32> {
    mu.iter().map(|&m| poisson_cap(lambda * m)).collect()
}

/// Default cap on the total number of points for a carrier of mass `lambda_total`.
pub fn default_n_total_max(lambda_total: f64) -> u32 {
    poisson_cap(lambda_total)
}

/// Identifies a state space; vectors and generators carry it so that
/// operations on mismatched spaces are rejected.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpaceKey(Arc<str>);

impl SpaceKey {
    pub fn new(description: impl Into<String>) -> Self {
        Self(Arc::from(description.into()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SpaceKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A unit increment or decrement of one coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Move {
    Up(usize),
    Down(usize),
}

impl Move {
    pub fn coord(self) -> usize {
        match self {
            Move::Up(c) | Move::Down(c) => c,
        }
    }
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Move::Up(c) => write!(f, "+e{c}"),
            Move::Down(c) => write!(f, "-e{c}"),
        }
    }
}

/// An enumerated, truncated state space of count vectors.
pub trait StateSpace: Send + Sync {
    /// Number of states `M`.
    fn len(&self) -> usize;

    /// Number of coordinates of each state.
    fn dim(&self) -> usize;

    /// The state with the given index.
    fn state(&self, index: usize) -> &[u32];

    /// Index of a state, or `None` if it lies outside the truncation.
    fn index_of(&self, state: &[u32]) -> Option<usize>;

    fn key(&self) -> SpaceKey;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All unit moves, ups before downs, coordinates in order.
    fn moves(&self) -> Vec<Move> {
        let d = self.dim();
        (0..d).map(Move::Up).chain((0..d).map(Move::Down)).collect()
    }

    /// Target of `mv` from the state at `index`, `None` when out of range.
    fn neighbor(&self, index: usize, mv: Move) -> Option<usize> {
        let mut target = self.state(index).to_vec();
        match mv {
            Move::Up(c) => target[c] = target[c].checked_add(1)?,
            Move::Down(c) => target[c] = target[c].checked_sub(1)?,
        }
        self.index_of(&target)
    }
}

fn check_capacity(states: usize, max: usize) -> Result<()> {
    if states > max {
        Err(Error::Capacity { states, max })
    } else {
        Ok(())
    }
}

/// The interval `{0, 1, ..., n_max}`.
#[derive(Debug, Clone)]
pub struct UniSpace {
    n_max: u32,
    states: Vec<u32>,
}

impl UniSpace {
    pub fn new(n_max: u32) -> Result<Self> {
        Self::with_max_states(n_max, DEFAULT_MAX_STATES)
    }

    pub fn with_max_states(n_max: u32, max_states: usize) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::InvalidParameter("n_max must be at least 1".into()));
        }
        check_capacity(n_max as usize + 1, max_states)?;
        Ok(Self {
            n_max,
            states: (0..=n_max).collect(),
        })
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }
}

impl StateSpace for UniSpace {
    fn len(&self) -> usize {
        self.states.len()
    }

    fn dim(&self) -> usize {
        1
    }

    fn state(&self, index: usize) -> &[u32] {
        std::slice::from_ref(&self.states[index])
    }

    fn index_of(&self, state: &[u32]) -> Option<usize> {
        match state {
            [j] if *j <= self.n_max => Some(*j as usize),
            _ => None,
        }
    }

    fn key(&self) -> SpaceKey {
        SpaceKey::new(format!("uni[{}]", self.n_max))
    }

    fn neighbor(&self, index: usize, mv: Move) -> Option<usize> {
        match mv {
            Move::Up(0) if index < self.n_max as usize => Some(index + 1),
            Move::Down(0) if index > 0 => Some(index - 1),
            _ => None,
        }
    }
}

/// The lattice box `prod_i {0, ..., n_max[i]}` with mixed-radix indexing.
#[derive(Debug, Clone)]
pub struct BoxSpace {
    n_max: Vec<u32>,
    strides: Vec<usize>,
    states: Vec<u32>,
}

impl BoxSpace {
    pub fn new(n_max: Vec<u32>) -> Result<Self> {
        Self::with_max_states(n_max, DEFAULT_MAX_STATES)
    }

    pub fn with_max_states(n_max: Vec<u32>, max_states: usize) -> Result<Self> {
        let d = n_max.len();
        if d < 2 {
            return Err(Error::InvalidParameter("box dimension must be at least 2".into()));
        }
        if n_max.iter().any(|&n| n < 1) {
            return Err(Error::InvalidParameter("box extents must be positive".into()));
        }
        let count = n_max
            .iter()
            .try_fold(1usize, |acc, &n| acc.checked_mul(n as usize + 1))
            .unwrap_or(usize::MAX);
        check_capacity(count, max_states)?;

        let mut strides = vec![1usize; d];
        for i in (0..d - 1).rev() {
            strides[i] = strides[i + 1] * (n_max[i + 1] as usize + 1);
        }
        let mut states = Vec::with_capacity(count * d);
        let mut cur = vec![0u32; d];
        for _ in 0..count {
            states.extend_from_slice(&cur);
            for i in (0..d).rev() {
                if cur[i] < n_max[i] {
                    cur[i] += 1;
                    break;
                }
                cur[i] = 0;
            }
        }
        Ok(Self {
            n_max,
            strides,
            states,
        })
    }

    pub fn n_max(&self) -> &[u32] {
        &self.n_max
    }
}

impl StateSpace for BoxSpace {
    fn len(&self) -> usize {
        self.states.len() / self.n_max.len()
    }

    fn dim(&self) -> usize {
        self.n_max.len()
    }

    fn state(&self, index: usize) -> &[u32] {
        let d = self.n_max.len();
        &self.states[index * d..(index + 1) * d]
    }

    fn index_of(&self, state: &[u32]) -> Option<usize> {
        if state.len() != self.n_max.len() {
            return None;
        }
        state
            .iter()
            .zip(&self.n_max)
            .zip(&self.strides)
            .try_fold(0usize, |acc, ((&w, &n), &s)| (w <= n).then_some(acc + w as usize * s))
    }

    fn key(&self) -> SpaceKey {
        SpaceKey::new(format!("box{:?}", self.n_max))
    }

    fn neighbor(&self, index: usize, mv: Move) -> Option<usize> {
        let c = mv.coord();
        let w = self.state(index)[c];
        match mv {
            Move::Up(_) if w < self.n_max[c] => Some(index + self.strides[c]),
            Move::Down(_) if w > 0 => Some(index - self.strides[c]),
            _ => None,
        }
    }
}

/// The finite ground space `Γ = S ∪ {a} ∪ {b}` with metric `d0` and
/// intensity measure `λ`.
///
/// Points are numbered `0..s_size` for `S`, then `a`, then `b`. The masses
/// at `a` and `b` are both `1/|λ|`; the rest of `|λ|` is spread uniformly
/// over `S`.
#[derive(Debug, Clone, PartialEq)]
pub struct Carrier {
    s_size: usize,
    lambda_total: f64,
    d0: Vec<f64>,
}

impl Carrier {
    /// Carrier with the discrete metric inside `S`.
    pub fn new(s_size: usize, lambda_total: f64) -> Result<Self> {
        let inner: Vec<f64> = (0..s_size * s_size)
            .map(|k| if k / s_size == k % s_size { 0.0 } else { 1.0 })
            .collect();
        Self::with_metric(s_size, lambda_total, &inner)
    }

    /// Carrier with a caller-supplied `s_size x s_size` metric on `S`
    /// (row-major). Distances involving `a` or `b` are fixed at 1.
    pub fn with_metric(s_size: usize, lambda_total: f64, d0_within_s: &[f64]) -> Result<Self> {
        if s_size < 1 {
            return Err(Error::InvalidParameter("carrier needs |S| >= 1".into()));
        }
        if !(lambda_total > std::f64::consts::SQRT_2) || !lambda_total.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "|lambda| = {lambda_total} must exceed sqrt(2)"
            )));
        }
        if d0_within_s.len() != s_size * s_size {
            return Err(Error::InvalidParameter("metric on S has the wrong shape".into()));
        }
        let n = s_size + 2;
        let mut d0 = vec![1.0; n * n];
        for i in 0..n {
            d0[i * n + i] = 0.0;
        }
        for i in 0..s_size {
            for j in 0..s_size {
                d0[i * n + j] = d0_within_s[i * s_size + j];
            }
        }
        for i in 0..s_size {
            for j in 0..s_size {
                let v = d0[i * n + j];
                if !(0.0..=1.0).contains(&v) || v != d0[j * n + i] || (i == j && v != 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "d0({i},{j}) = {v} is not a symmetric distance in [0, 1]"
                    )));
                }
                if i != j && v == 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "d0 must separate points of S ({i} and {j})"
                    )));
                }
                for k in 0..s_size {
                    if v > d0[i * n + k] + d0[k * n + j] + 1e-12 {
                        return Err(Error::InvalidParameter(format!(
                            "d0 violates the triangle inequality at ({i},{k},{j})"
                        )));
                    }
                }
            }
        }
        Ok(Self {
            s_size,
            lambda_total,
            d0,
        })
    }

    pub fn s_size(&self) -> usize {
        self.s_size
    }

    /// Number of carrier points `|S| + 2`.
    pub fn points(&self) -> usize {
        self.s_size + 2
    }

    pub fn a(&self) -> usize {
        self.s_size
    }

    pub fn b(&self) -> usize {
        self.s_size + 1
    }

    pub fn lambda_total(&self) -> f64 {
        self.lambda_total
    }

    /// `λ(S) = |λ| - 2/|λ|`.
    pub fn lambda_s(&self) -> f64 {
        self.lambda_total - 2.0 / self.lambda_total
    }

    /// Intensity `λ({α})` of carrier point `alpha`.
    pub fn intensity(&self, alpha: usize) -> f64 {
        if alpha < self.s_size {
            self.lambda_s() / self.s_size as f64
        } else {
            1.0 / self.lambda_total
        }
    }

    pub fn d0(&self, alpha: usize, beta: usize) -> f64 {
        self.d0[alpha * self.points() + beta]
    }

    /// True when every pair of distinct points is at distance 1.
    pub fn is_discrete(&self) -> bool {
        let n = self.points();
        (0..n).all(|i| (0..n).all(|j| i == j || self.d0(i, j) == 1.0))
    }
}

/// Finite point configurations over a [`Carrier`], represented as count
/// vectors `ξ(α)` with `ξ(Γ) <= n_total_max` and `ξ({a}), ξ({b}) <= n_ab_max`.
#[derive(Debug, Clone)]
pub struct ConfigSpace {
    carrier: Carrier,
    n_total_max: u32,
    n_ab_max: u32,
    states: Vec<u32>,
    index: HashMap<Box<[u32]>, usize>,
}

impl ConfigSpace {
    pub fn new(carrier: Carrier, n_total_max: u32, n_ab_max: u32) -> Result<Self> {
        Self::with_max_states(carrier, n_total_max, n_ab_max, DEFAULT_MAX_STATES)
    }

    /// Default truncation for the carrier: `n_total_max` from the Poisson
    /// tail rule and `n_ab_max = 6`.
    pub fn for_carrier(carrier: Carrier, max_states: usize) -> Result<Self> {
        let n = default_n_total_max(carrier.lambda_total());
        Self::with_max_states(carrier, n, DEFAULT_N_AB_MAX, max_states)
    }

    pub fn with_max_states(
        carrier: Carrier,
        n_total_max: u32,
        n_ab_max: u32,
        max_states: usize,
    ) -> Result<Self> {
        let count = config_count(carrier.s_size(), n_total_max, n_ab_max);
        check_capacity(count, max_states)?;
        let dim = carrier.points();
        let mut states = Vec::with_capacity(count * dim);
        let mut cur = vec![0u32; dim];
        enumerate_configs(&mut cur, 0, n_total_max, carrier.s_size(), n_ab_max, &mut states);
        debug_assert_eq!(states.len(), count * dim);
        let index = states
            .chunks_exact(dim)
            .enumerate()
            .map(|(i, s)| (Box::<[u32]>::from(s), i))
            .collect();
        Ok(Self {
            carrier,
            n_total_max,
            n_ab_max,
            states,
            index,
        })
    }

    pub fn carrier(&self) -> &Carrier {
        &self.carrier
    }

    pub fn n_total_max(&self) -> u32 {
        self.n_total_max
    }

    pub fn n_ab_max(&self) -> u32 {
        self.n_ab_max
    }

    /// Index of the empty configuration.
    pub fn empty(&self) -> usize {
        0
    }

    /// Index of `δ_α` for a carrier point `alpha`.
    pub fn dirac(&self, alpha: usize) -> usize {
        let mut s = vec![0u32; self.dim()];
        s[alpha] = 1;
        self.index_of(&s).expect("single points always fit the truncation")
    }

    /// Index of the configuration `Σ δ_α` over the given points.
    pub fn config_of(&self, points: &[usize]) -> Option<usize> {
        let mut s = vec![0u32; self.dim()];
        for &p in points {
            s[p] += 1;
        }
        self.index_of(&s)
    }

    /// Total number of points `ξ(Γ)` of the state at `index`.
    pub fn total(&self, index: usize) -> u32 {
        self.state(index).iter().sum()
    }
}

fn enumerate_configs(
    cur: &mut [u32],
    pos: usize,
    budget: u32,
    s_size: usize,
    n_ab_max: u32,
    out: &mut Vec<u32>,
) {
    if pos == cur.len() {
        out.extend_from_slice(cur);
        return;
    }
    let cap = if pos < s_size { budget } else { budget.min(n_ab_max) };
    for v in 0..=cap {
        cur[pos] = v;
        enumerate_configs(cur, pos + 1, budget - v, s_size, n_ab_max, out);
    }
    cur[pos] = 0;
}

fn binomial(n: u64, k: u64) -> usize {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128) as usize
}

/// Closed-form number of configurations: for each `(n_a, n_b)` the number
/// of count vectors on `S` with sum at most `N - n_a - n_b`.
pub fn config_count(s_size: usize, n_total_max: u32, n_ab_max: u32) -> usize {
    let mut count = 0usize;
    for na in 0..=n_ab_max.min(n_total_max) {
        for nb in 0..=n_ab_max.min(n_total_max - na) {
            let rest = (n_total_max - na - nb) as u64;
            count = count.saturating_add(binomial(rest + s_size as u64, s_size as u64));
        }
    }
    count
}

impl StateSpace for ConfigSpace {
    fn len(&self) -> usize {
        self.index.len()
    }

    fn dim(&self) -> usize {
        self.carrier.points()
    }

    fn state(&self, index: usize) -> &[u32] {
        let d = self.dim();
        &self.states[index * d..(index + 1) * d]
    }

    fn index_of(&self, state: &[u32]) -> Option<usize> {
        self.index.get(state).copied()
    }

    fn key(&self) -> SpaceKey {
        SpaceKey::new(format!(
            "config[s={},N={},ab={},lambda={:e}]",
            self.carrier.s_size(),
            self.n_total_max,
            self.n_ab_max,
            self.carrier.lambda_total()
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roundtrip(space: &dyn StateSpace) {
        for i in 0..space.len() {
            assert_eq!(space.index_of(space.state(i)), Some(i));
        }
    }

    #[test]
    fn uni_enumeration() {
        let s = UniSpace::new(3).unwrap();
        assert_eq!(s.len(), 4);
        let states: Vec<u32> = (0..4).map(|i| s.state(i)[0]).collect();
        assert_eq!(states, vec![0, 1, 2, 3]);
        roundtrip(&s);
    }

    #[test]
    fn box_enumeration_is_lexicographic() {
        let s = BoxSpace::new(vec![1, 1]).unwrap();
        let states: Vec<&[u32]> = (0..s.len()).map(|i| s.state(i)).collect();
        assert_eq!(states, vec![&[0, 0][..], &[0, 1], &[1, 0], &[1, 1]]);
        let s = BoxSpace::new(vec![3, 2, 4]).unwrap();
        assert_eq!(s.len(), 4 * 3 * 5);
        roundtrip(&s);
    }

    #[test]
    fn small_config_space_by_hand() {
        // (n_S, n_a, n_b) with sum <= 2 and n_a, n_b <= 1
        let c = Carrier::new(1, 2.0).unwrap();
        let s = ConfigSpace::new(c, 2, 1).unwrap();
        let mut brute = Vec::new();
        for ns in 0..=2u32 {
            for na in 0..=1u32 {
                for nb in 0..=1u32 {
                    if ns + na + nb <= 2 {
                        brute.push([ns, na, nb]);
                    }
                }
            }
        }
        assert_eq!(brute.len(), 8);
        assert_eq!(s.len(), brute.len());
        for st in &brute {
            assert!(s.index_of(st).is_some());
        }
        assert_eq!(s.state(0), &[0, 0, 0]);
        roundtrip(&s);
    }

    #[test]
    fn config_count_matches_exhaustive_generation() {
        for s_size in 1..=3usize {
            for n in 0..=6u32 {
                for ab in 0..=3u32 {
                    let dim = s_size + 2;
                    let mut brute = 0usize;
                    let total = 7u32.pow(dim as u32);
                    for code in 0..total {
                        let mut c = code;
                        let mut v = vec![0u32; dim];
                        for x in v.iter_mut() {
                            *x = c % 7;
                            c /= 7;
                        }
                        let sum: u32 = v.iter().sum();
                        if sum <= n && v[s_size] <= ab && v[s_size + 1] <= ab {
                            brute += 1;
                        }
                    }
                    assert_eq!(config_count(s_size, n, ab), brute, "s={s_size} n={n} ab={ab}");
                }
            }
        }
    }

    #[test]
    fn neighbors_at_boundaries() {
        let u = UniSpace::new(5).unwrap();
        assert_eq!(u.neighbor(5, Move::Up(0)), None);
        assert_eq!(u.neighbor(0, Move::Down(0)), None);
        assert_eq!(u.neighbor(2, Move::Up(0)), Some(3));

        let b = BoxSpace::new(vec![2, 2]).unwrap();
        let i = b.index_of(&[1, 0]).unwrap();
        assert_eq!(b.neighbor(i, Move::Down(1)), None);
        assert_eq!(b.neighbor(i, Move::Down(0)), b.index_of(&[0, 0]));
        assert_eq!(b.neighbor(i, Move::Up(1)), b.index_of(&[1, 1]));

        let c = ConfigSpace::new(Carrier::new(1, 4.0).unwrap(), 5, 2).unwrap();
        let da = c.dirac(c.carrier().a());
        assert_eq!(c.neighbor(da, Move::Down(1)), Some(c.empty()));
        let top = c.index_of(&[5, 0, 0]).unwrap();
        assert_eq!(c.neighbor(top, Move::Up(0)), None);
        let capped = c.index_of(&[0, 2, 0]).unwrap();
        assert_eq!(c.neighbor(capped, Move::Up(1)), None);
    }

    #[test]
    fn capacity_overflow() {
        assert!(matches!(
            BoxSpace::with_max_states(vec![99, 99], 1000),
            Err(Error::Capacity { states: 10_000, max: 1000 })
        ));
        assert!(UniSpace::new(0).is_err());
    }

    #[test]
    fn carrier_masses_and_metric() {
        let c = Carrier::new(3, 4.0).unwrap();
        assert_eq!(c.intensity(c.a()), 0.25);
        assert_eq!(c.intensity(c.b()), 0.25);
        let total: f64 = (0..c.points()).map(|a| c.intensity(a)).sum();
        assert!((total - 4.0).abs() < 1e-14);
        assert_eq!(c.d0(c.a(), c.b()), 1.0);
        assert_eq!(c.d0(0, c.a()), 1.0);
        assert!(c.is_discrete());
        assert!(Carrier::new(1, 1.4).is_err());
        let bad = Carrier::with_metric(2, 4.0, &[0.0, 0.3, 0.4, 0.0]);
        assert!(bad.is_err());
        let ok = Carrier::with_metric(2, 4.0, &[0.0, 0.3, 0.3, 0.0]).unwrap();
        assert!(!ok.is_discrete());
    }

    #[test]
    fn default_truncations() {
        assert_eq!(default_uni_n_max(1.0), 33);
        assert_eq!(default_uni_n_max(100.0), 240);
        assert_eq!(default_box_n_max(128.0, &[0.5, 0.5]), vec![180, 180]);
        assert_eq!(default_n_total_max(4.0), 48);
    }
}
