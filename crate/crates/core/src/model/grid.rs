use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest number of steps any grid may have.
pub const MIN_STEPS: usize = 8;

/// Uniform grid `t_k = k * horizon / n`, `k = 0..=n`.
///
/// The step is derived from `horizon` and `n` on demand so that `t_n` equals
/// the horizon exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformGrid {
    pub horizon: f64,
    pub n: usize,
}

impl UniformGrid {
    pub fn new(horizon: f64, n: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::config(format!("grid horizon must be positive, got {horizon}")));
        }
        if n < MIN_STEPS {
            return Err(Error::config(format!("grid needs at least {MIN_STEPS} steps, got {n}")));
        }
        Ok(Self { horizon, n })
    }

    pub fn h(&self) -> f64 {
        self.horizon / self.n as f64
    }

    pub fn t(&self, k: usize) -> f64 {
        self.horizon * k as f64 / self.n as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..=self.n).map(|k| self.t(k)).collect()
    }

    pub fn len(&self) -> usize {
        self.n + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid with the same step over twice the horizon.
    pub fn doubled(&self) -> Self {
        Self {
            horizon: 2.0 * self.horizon,
            n: 2 * self.n,
        }
    }

    /// Grid with the same step over the first `k` steps.
    pub fn prefix(&self, k: usize) -> Self {
        Self {
            horizon: self.t(k),
            n: k,
        }
    }

    pub fn same_step(&self, other: &Self) -> bool {
        (self.h() - other.h()).abs() <= 1e-12 * self.h()
    }

    pub fn same_as(&self, other: &Self) -> bool {
        self.n == other.n && self.same_step(other)
    }

    /// Index of the grid node at `t`, if `t` is (to rounding) a node.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let k = (t / self.h()).round();
        if k < 0.0 || k > self.n as f64 {
            return None;
        }
        ((t - k * self.h()).abs() <= 1e-9 * self.h()).then_some(k as usize)
    }
}
