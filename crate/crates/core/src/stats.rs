//! Welford running moments.

use serde::{Deserialize, Serialize};

/// Per-coordinate running mean and population variance.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunningMoments {
    count: u64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl RunningMoments {
    pub fn new(dim: usize) -> Self {
        RunningMoments {
            count: 0,
            mean: vec![0.0; dim],
            m2: vec![0.0; dim],
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Caller guarantees `x.len() == self.dim()`.
    pub fn update(&mut self, x: &[f64]) {
        self.count += 1;
        let n = self.count as f64;
        for ((mu, m2), &v) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(x) {
            let delta = v - *mu;
            *mu += delta / n;
            *m2 += delta * (v - *mu);
        }
    }

    /// Population variance of coordinate `j`; zero before the first update.
    pub fn variance(&self, j: usize) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.m2[j] / self.count as f64).max(0.0)
        }
    }

    pub fn variances(&self) -> Vec<f64> {
        (0..self.dim()).map(|j| self.variance(j)).collect()
    }

    /// Overwrites the moments; used by tests that need a pinned state.
    pub fn set(&mut self, count: u64, mean: Vec<f64>, variance: Vec<f64>) {
        let n = count as f64;
        self.m2 = variance.iter().map(|v| v * n).collect();
        self.mean = mean;
        self.count = count;
    }
}

/// Standardized deviation with the variance floored at `eps`.
pub(crate) fn z_value(x: f64, mean: f64, variance: f64, eps: f64) -> f64 {
    (x - mean) / variance.sqrt().max(eps)
}
