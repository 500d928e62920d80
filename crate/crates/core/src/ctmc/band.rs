/// Dense band storage: row `i` holds columns `i - kl ..= i + ku`.
#[derive(Debug, Clone)]
pub(crate) struct Band {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl Band {
    pub(crate) fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    /// Number of stored entries a band of this shape would need.
    pub(crate) fn storage(n: usize, kl: usize, ku: usize) -> usize {
        n.saturating_mul(kl + ku + 1)
    }

    #[inline]
    fn offset(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.n && j < self.n);
        debug_assert!(j + self.kl >= i && j <= i + self.ku, "({i},{j}) outside band");
        i * self.width + j + self.kl - i
    }

    #[inline]
    pub(crate) fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.offset(i, j)]
    }

    #[inline]
    pub(crate) fn add(&mut self, i: usize, j: usize, v: f64) {
        let o = self.offset(i, j);
        self.data[o] += v;
    }

    pub(crate) fn kl(&self) -> usize {
        self.kl
    }

    pub(crate) fn ku(&self) -> usize {
        self.ku
    }

    /// Contiguous slice of row `i` covering columns `lo..=hi`.
    #[inline]
    pub(crate) fn row_slice(&self, i: usize, lo: usize, hi: usize) -> &[f64] {
        let a = self.offset(i, lo);
        &self.data[a..a + (hi - lo + 1)]
    }

    #[inline]
    pub(crate) fn row_slice_mut(&mut self, i: usize, lo: usize, hi: usize) -> &mut [f64] {
        let a = self.offset(i, lo);
        &mut self.data[a..a + (hi - lo + 1)]
    }
}
