//! Running Mahalanobis distance over numeric streams.

use serde::{Deserialize, Serialize};

use crate::detector::{Detector, Label, StreamShape};
use crate::error::{check_finite, Result, SadError};
use crate::state::Persist;

pub const DEFAULT_EPSILON: f64 = 1e-6;

/// Distance of `x` from the running mean under the running population
/// covariance, regularized by `epsilon * I`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mahalanobis {
    epsilon: f64,
    seed: u64,
    shape: StreamShape,
    count: u64,
    mean: Vec<f64>,
    /// Row-major co-moment matrix, sum of (x - mean)(x - mean)^T.
    comoment: Vec<f64>,
}

impl Mahalanobis {
    pub fn new(epsilon: f64, seed: u64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(SadError::bad_parameter(format!(
                "mahalanobis epsilon must be finite and > 0, got {epsilon}"
            )));
        }
        Ok(Mahalanobis {
            epsilon,
            seed,
            shape: StreamShape::default(),
            count: 0,
            mean: Vec::new(),
            comoment: Vec::new(),
        })
    }

    /// Builds a state whose running moments are exactly `mean` and
    /// `covariance` (row-major, symmetric) after `count` instances.
    pub fn from_moments(
        mean: Vec<f64>,
        covariance: Vec<f64>,
        count: u64,
        epsilon: f64,
        seed: u64,
    ) -> Result<Self> {
        let mut state = Self::new(epsilon, seed)?;
        let m = mean.len();
        if m == 0 || covariance.len() != m * m {
            return Err(SadError::bad_parameter(
                "covariance must be an m x m matrix for a non-empty mean",
            ));
        }
        if count == 0 {
            return Err(SadError::bad_parameter("count must be positive"));
        }
        check_finite(&mean)?;
        check_finite(&covariance)?;
        state.shape.admit(&mean)?;
        state.count = count;
        state.comoment = covariance.iter().map(|c| c * count as f64).collect();
        state.mean = mean;
        Ok(state)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Population covariance, row-major; zero while fewer than two instances.
    pub fn covariance(&self) -> Vec<f64> {
        if self.count < 2 {
            return vec![0.0; self.comoment.len()];
        }
        let n = self.count as f64;
        self.comoment.iter().map(|c| c / n).collect()
    }
}

/// In-place Cholesky factor (lower triangle) of a symmetric positive-definite
/// row-major matrix.
fn cholesky(a: &mut [f64], m: usize) -> Option<()> {
    for j in 0..m {
        let mut d = a[j * m + j];
        for k in 0..j {
            d -= a[j * m + k] * a[j * m + k];
        }
        if d <= 0.0 || !d.is_finite() {
            return None;
        }
        let d = d.sqrt();
        a[j * m + j] = d;
        for i in j + 1..m {
            let mut s = a[i * m + j];
            for k in 0..j {
                s -= a[i * m + k] * a[j * m + k];
            }
            a[i * m + j] = s / d;
        }
    }
    Some(())
}

impl Detector for Mahalanobis {
    fn fit_partial(&mut self, x: &[f64], _label: Option<Label>) -> Result<()> {
        let m = x.len();
        if self.shape.admit(x)? {
            self.mean = vec![0.0; m];
            self.comoment = vec![0.0; m * m];
        }
        self.count += 1;
        let n = self.count as f64;
        let delta: Vec<f64> = x.iter().zip(&self.mean).map(|(v, mu)| v - mu).collect();
        for (mu, d) in self.mean.iter_mut().zip(&delta) {
            *mu += d / n;
        }
        // (x - mean_old)(x - mean_new)^T == (n-1)/n * delta delta^T; the product
        // form below is symmetric bit for bit.
        let w = (n - 1.0) / n;
        for i in 0..m {
            for j in i..m {
                let c = self.comoment[i * m + j] + w * (delta[i] * delta[j]);
                self.comoment[i * m + j] = c;
                self.comoment[j * m + i] = c;
            }
        }
        self.shape.record();
        Ok(())
    }

    fn score_partial(&self, x: &[f64]) -> Result<f64> {
        self.shape.check(x)?;
        if self.count == 0 {
            return Ok(0.0);
        }
        let m = x.len();
        let mut a = self.covariance();
        for j in 0..m {
            a[j * m + j] += self.epsilon;
        }
        cholesky(&mut a, m).ok_or_else(|| {
            SadError::bad_parameter("regularized covariance is not positive definite")
        })?;
        // Forward substitution: L y = x - mean; distance^2 = |y|^2.
        let mut y = vec![0.0; m];
        for i in 0..m {
            let mut s = x[i] - self.mean[i];
            for k in 0..i {
                s -= a[i * m + k] * y[k];
            }
            y[i] = s / a[i * m + i];
        }
        Ok(y.iter().map(|v| v * v).sum::<f64>().sqrt())
    }

    fn instances_seen(&self) -> u64 {
        self.shape.seen()
    }

    fn dim(&self) -> Option<usize> {
        self.shape.dim()
    }

    fn seed(&self) -> u64 {
        self.seed
    }

    fn retained_instances(&self) -> usize {
        0
    }

    fn memory_budget(&self) -> usize {
        0
    }
}

impl Persist for Mahalanobis {
    const KIND: &'static str = "mahalanobis";
}
