use crate::error::{Error, Result};
use crate::state_space::SpaceKey;

/// A probability vector over an enumerated state space.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVec {
    key: SpaceKey,
    values: Vec<f64>,
}

impl ProbVec {
    /// Wraps `values`, which must be nonnegative and sum to 1 within `1e-12`.
    pub fn new(key: SpaceKey, values: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v >= 0.0) || !v.is_finite())
        {
            return Err(Error::InvalidParameter(format!(
                "probability entry {i} is {v}"
            )));
        }
        let total: f64 = values.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(Self { key, values })
    }

    /// Normalises nonnegative weights into a probability vector.
    pub fn from_weights(key: SpaceKey, mut weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "weights sum to {total}"
            )));
        }
        for w in &mut weights {
            *w /= total;
        }
        Self::new(key, weights)
    }

    pub fn key(&self) -> &SpaceKey {
        &self.key
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, index: usize) -> f64 {
        self.values[index]
    }

    /// `E h` under this law.
    pub fn expect(&self, h: &[f64]) -> f64 {
        assert_eq!(h.len(), self.values.len(), "test function length mismatch");
        self.values.iter().zip(h).map(|(p, v)| p * v).sum()
    }

    pub fn argmax(&self) -> usize {
        self.values
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best })
            .0
    }

    pub(crate) fn check_same_space(&self, other: &ProbVec) -> Result<()> {
        if self.key != other.key || self.values.len() != other.values.len() {
            return Err(Error::SpaceMismatch {
                left: self.key.to_string(),
                right: other.key.to_string(),
            });
        }
        Ok(())
    }
}

/// A solution of a Stein (Poisson) equation `A g = rhs` with a pinned gauge.
#[derive(Debug, Clone, PartialEq)]
pub struct SteinSolution {
    key: SpaceKey,
    values: Vec<f64>,
    gauge: usize,
    residual: f64,
}

impl SteinSolution {
    pub(crate) fn new(key: SpaceKey, values: Vec<f64>, gauge: usize, residual: f64) -> Self {
        Self {
            key,
            values,
            gauge,
            residual,
        }
    }

    /// Builds a solution from raw values, e.g. for testing difference functionals.
    pub fn from_values(key: SpaceKey, values: Vec<f64>, gauge: usize) -> Self {
        Self::new(key, values, gauge, 0.0)
    }

    pub fn key(&self) -> &SpaceKey {
        &self.key
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, index: usize) -> f64 {
        self.values[index]
    }

    /// Reference state of the gauge convention.
    pub fn gauge(&self) -> usize {
        self.gauge
    }

    /// Relative residual `max |A g - rhs| / (max|rhs| + max rate * max|g|)`.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// Adds a constant, moving the gauge.
    pub fn shifted(&self, c: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v + c).collect(),
            ..self.clone()
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}
