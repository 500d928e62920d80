use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::state_space::{Move, SpaceKey, StateSpace};

use super::prob::ProbVec;

/// A conservative CTMC generator in compressed-row form.
///
/// Only off-diagonal rates are stored; the diagonal is minus the row sum.
/// Rates whose target falls outside the truncation are dropped and kept
/// per state as `leak`.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    key: SpaceKey,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    rates: Vec<f64>,
    leak: Vec<f64>,
}

impl Generator {
    /// Builds the generator on `space` with rates `rule(index, state, move)`.
    pub fn assemble<S, F>(space: &S, rule: F) -> Result<Self>
    where
        S: StateSpace + ?Sized,
        F: Fn(usize, &[u32], Move) -> f64,
    {
        let n = space.len();
        let moves = space.moves();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::with_capacity(n * moves.len());
        let mut rates = Vec::with_capacity(n * moves.len());
        let mut leak = vec![0.0; n];
        row_ptr.push(0);
        for i in 0..n {
            let state = space.state(i);
            for &mv in &moves {
                let rate = rule(i, state, mv);
                if !(rate >= 0.0) || !rate.is_finite() {
                    return Err(Error::NegativeRate {
                        state: i,
                        mv: mv.to_string(),
                        rate,
                    });
                }
                if rate == 0.0 {
                    continue;
                }
                match space.neighbor(i, mv) {
                    Some(j) => {
                        cols.push(j);
                        rates.push(rate);
                    }
                    None => leak[i] += rate,
                }
            }
            row_ptr.push(cols.len());
        }
        Ok(Self {
            key: space.key(),
            row_ptr,
            cols,
            rates,
            leak,
        })
    }

    /// Builds a generator from `(from, to, rate)` triplets on `n` states.
    /// Duplicate pairs are summed; self-loops are ignored.
    pub fn from_triplets(key: SpaceKey, n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, r) in triplets {
            if i >= n || j >= n {
                return Err(Error::OutOfRange(format!("transition {i} -> {j} on {n} states")));
            }
            if !(r >= 0.0) || !r.is_finite() {
                return Err(Error::NegativeRate {
                    state: i,
                    mv: format!("-> {j}"),
                    rate: r,
                });
            }
            if i == j || r == 0.0 {
                continue;
            }
            match rows[i].iter_mut().find(|(c, _)| *c == j) {
                Some(e) => e.1 += r,
                None => rows[i].push((j, r)),
            }
        }
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut rates = Vec::new();
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            for (j, r) in row {
                cols.push(j);
                rates.push(r);
            }
            row_ptr.push(cols.len());
        }
        Ok(Self {
            key,
            row_ptr,
            cols,
            rates,
            leak: vec![0.0; n],
        })
    }

    pub fn key(&self) -> &SpaceKey {
        &self.key
    }

    pub fn len(&self) -> usize {
        self.leak.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leak.is_empty()
    }

    /// Off-diagonal entries `(target, rate)` of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.rates[r].iter().copied())
    }

    /// Rate from `i` to `j` (zero if absent), `i != j`.
    pub fn rate(&self, i: usize, j: usize) -> f64 {
        self.row(i).filter(|&(c, _)| c == j).map(|(_, r)| r).sum()
    }

    /// Total exit rate `-Q(i,i)`.
    pub fn exit_rate(&self, i: usize) -> f64 {
        self.row(i).map(|(_, r)| r).sum()
    }

    pub fn max_exit_rate(&self) -> f64 {
        (0..self.len()).map(|i| self.exit_rate(i)).fold(0.0, f64::max)
    }

    /// Rate dropped at the truncation boundary from state `i`.
    pub fn leak(&self, i: usize) -> f64 {
        self.leak[i]
    }

    /// Truncation-leak diagnostic `Σ_i π(i) leak(i)`.
    pub fn leak_under(&self, pi: &ProbVec) -> f64 {
        pi.values().iter().zip(&self.leak).map(|(p, l)| p * l).sum()
    }

    /// Largest row sum of `Q` in absolute value; zero for a conservative generator.
    pub fn row_sum_defect(&self) -> f64 {
        // the diagonal is defined from the row, so this only guards against
        // non-finite entries
        (0..self.len())
            .map(|i| {
                let s: f64 = self.row(i).map(|(_, r)| r).sum();
                (s - self.exit_rate(i)).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Lower and upper bandwidth of the off-diagonal pattern.
    pub fn bandwidths(&self) -> (usize, usize) {
        let (mut kl, mut ku) = (0, 0);
        for i in 0..self.len() {
            for (j, _) in self.row(i) {
                if j < i {
                    kl = kl.max(i - j);
                } else {
                    ku = ku.max(j - i);
                }
            }
        }
        (kl, ku)
    }

    /// `(Q g)(i) = Σ_j q(i,j) (g(j) - g(i))`.
    pub fn apply(&self, g: &[f64]) -> Vec<f64> {
        assert_eq!(g.len(), self.len());
        (0..self.len())
            .map(|i| self.row(i).map(|(j, r)| r * (g[j] - g[i])).sum())
            .collect()
    }

    /// Row vector product `(x Q)(j)`.
    pub fn left_apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.len());
        let mut out = vec![0.0; self.len()];
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (j, r) in self.row(i) {
                out[j] += xi * r;
                out[i] -= xi * r;
            }
        }
        out
    }

    /// True when every state reaches and is reached from state 0.
    pub fn is_irreducible(&self) -> bool {
        self.unreached() == 0
    }

    /// Number of states not in the strongly connected class of state 0.
    pub(crate) fn unreached(&self) -> usize {
        let n = self.len();
        if n == 0 {
            return 0;
        }
        let forward = self.reach_from_zero(|i, push| {
            for (j, _) in self.row(i) {
                push(j);
            }
        });
        let mut reverse: Vec<Vec<usize>> = vec![Vec::new(); n];
        for i in 0..n {
            for (j, _) in self.row(i) {
                reverse[j].push(i);
            }
        }
        let backward = self.reach_from_zero(|i, push| {
            for &j in &reverse[i] {
                push(j);
            }
        });
        (0..n).filter(|&i| !(forward[i] && backward[i])).count()
    }

    fn reach_from_zero(&self, mut adj: impl FnMut(usize, &mut dyn FnMut(usize))) -> Vec<bool> {
        let mut seen = vec![false; self.len()];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(i) = queue.pop_front() {
            adj(i, &mut |j| {
                if !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            });
        }
        seen
    }

    pub(crate) fn ensure_irreducible(&self) -> Result<()> {
        match self.unreached() {
            0 => Ok(()),
            unreached => Err(Error::Reducible {
                unreached,
                states: self.len(),
            }),
        }
    }

    /// Exact row-wise difference `self - base` as sparse rows, including
    /// the diagonal. Rows whose rates coincide bit for bit contribute nothing.
    pub(crate) fn row_differences(&self, base: &Generator) -> Result<Vec<(usize, Vec<(usize, f64)>)>> {
        if self.key != base.key || self.len() != base.len() {
            return Err(Error::SpaceMismatch {
                left: self.key.to_string(),
                right: base.key.to_string(),
            });
        }
        let mut out = Vec::new();
        for i in 0..self.len() {
            let mut diff: Vec<(usize, f64)> = self.row(i).collect();
            for (j, r) in base.row(i) {
                match diff.iter_mut().find(|e| e.0 == j) {
                    Some(e) => e.1 -= r,
                    None => diff.push((j, -r)),
                }
            }
            diff.retain(|e| e.1 != 0.0);
            if diff.is_empty() {
                continue;
            }
            let exit: f64 = diff.iter().map(|e| e.1).sum();
            diff.push((i, -exit));
            out.push((i, diff));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state_space::UniSpace;

    fn immigration_death(space: &UniSpace, lambda: f64) -> Generator {
        Generator::assemble(space, |_, s, mv| match mv {
            Move::Up(_) => lambda,
            Move::Down(_) => s[0] as f64,
        })
        .unwrap()
    }

    #[test]
    fn immigration_death_rows() {
        let space = UniSpace::new(2).unwrap();
        let g = immigration_death(&space, 1.0);
        assert_eq!(g.row(0).collect::<Vec<_>>(), vec![(1, 1.0)]);
        assert_eq!(g.row(1).collect::<Vec<_>>(), vec![(2, 1.0), (0, 1.0)]);
        assert_eq!(g.row(2).collect::<Vec<_>>(), vec![(1, 2.0)]);
        assert_eq!(g.leak(2), 1.0);
        assert_eq!(g.leak(1), 0.0);
        assert_eq!(g.bandwidths(), (1, 1));
        assert!(g.is_irreducible());
        let ones = vec![1.0; 3];
        assert!(g.apply(&ones).iter().all(|&v| v == 0.0));
        assert_eq!(g.row_sum_defect(), 0.0);
    }

    #[test]
    fn zero_rule_is_reducible() {
        let space = UniSpace::new(4).unwrap();
        let g = Generator::assemble(&space, |_, _, _| 0.0).unwrap();
        assert!(g.row(2).next().is_none());
        assert!(!g.is_irreducible());
        assert!(matches!(g.ensure_irreducible(), Err(Error::Reducible { unreached: 4, .. })));
    }

    #[test]
    fn negative_rate_names_state_and_move() {
        let space = UniSpace::new(3).unwrap();
        let err = Generator::assemble(&space, |i, _, mv| if i == 2 && mv == Move::Down(0) { -1.0 } else { 1.0 })
            .unwrap_err();
        assert_eq!(
            err,
            Error::NegativeRate {
                state: 2,
                mv: "-e0".into(),
                rate: -1.0
            }
        );
    }

    #[test]
    fn row_differences_are_local() {
        let space = UniSpace::new(6).unwrap();
        let base = immigration_death(&space, 2.0);
        let pert = Generator::assemble(&space, |_, s, mv| {
            let bump = if s[0] == 3 { 1.0 } else { 0.0 };
            match mv {
                Move::Up(_) => 2.0 + bump,
                Move::Down(_) => s[0] as f64 + bump,
            }
        })
        .unwrap();
        let d = pert.row_differences(&base).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].0, 3);
        let mut row = d[0].1.clone();
        row.sort_by_key(|e| e.0);
        assert_eq!(row, vec![(2, 1.0), (3, -2.0), (4, 1.0)]);
    }

    #[test]
    fn left_apply_of_constant_rows() {
        let g = Generator::from_triplets(SpaceKey::new("two"), 2, &[(0, 1, 2.0), (1, 0, 1.0)]).unwrap();
        let r = g.left_apply(&[1.0 / 3.0, 2.0 / 3.0]);
        assert!(r.iter().all(|v| v.abs() < 1e-15));
    }
}
