//! Score smoothing and score-to-probability calibration.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Result, SadError};
use crate::state::Persist;
use crate::stats::z_value;

const GAUSSIAN_TAIL_EPS: f64 = 1e-9;

fn finite(s: f64) -> Result<f64> {
    if s.is_finite() {
        Ok(s)
    } else {
        Err(SadError::NonFiniteInput { position: 0 })
    }
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Exponentially weighted moving average of a score stream.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ewma {
    alpha: f64,
    last: Option<f64>,
}

impl Ewma {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(SadError::bad_parameter(format!(
                "ewma alpha must lie in (0, 1], got {alpha}"
            )));
        }
        Ok(Ewma { alpha, last: None })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn update(&mut self, score: f64) -> Result<f64> {
        let s = finite(score)?;
        let next = match self.last {
            None => s,
            Some(prev) => self.alpha * s + (1.0 - self.alpha) * prev,
        };
        self.last = Some(next);
        Ok(next)
    }
}

impl Persist for Ewma {
    const KIND: &'static str = "ewma";
}

/// Rank of a score among the last `window` scores, as a probability of
/// being anomalous. The score is ranked before it joins the window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Conformal {
    capacity: usize,
    window: VecDeque<f64>,
}

impl Conformal {
    pub fn new(window: usize) -> Result<Self> {
        if window == 0 {
            return Err(SadError::bad_parameter(
                "conformal window must be at least 1",
            ));
        }
        Ok(Conformal {
            capacity: window,
            window: VecDeque::with_capacity(window),
        })
    }

    /// Seeds the window, oldest first; keeps only the newest `capacity`.
    pub fn with_history(window: usize, history: &[f64]) -> Result<Self> {
        let mut c = Self::new(window)?;
        for &s in history {
            c.push(finite(s)?);
        }
        Ok(c)
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.window.len()
    }

    pub fn is_empty(&self) -> bool {
        self.window.is_empty()
    }

    /// Rank fraction of `score` against the current window, without
    /// inserting it. 0.5 for an empty window.
    pub fn probability(&self, score: f64) -> Result<f64> {
        let s = finite(score)?;
        if self.window.is_empty() {
            return Ok(0.5);
        }
        let (mut below, mut ties) = (0usize, 0usize);
        for &w in &self.window {
            if w < s {
                below += 1;
            } else if w == s {
                ties += 1;
            }
        }
        Ok((below as f64 + 0.5 * ties as f64) / self.window.len() as f64)
    }

    pub fn calibrate(&mut self, score: f64) -> Result<f64> {
        let p = self.probability(score)?;
        self.push(score);
        Ok(p)
    }

    fn push(&mut self, s: f64) {
        if self.window.len() == self.capacity {
            self.window.pop_front();
        }
        self.window.push_back(s);
    }
}

impl Persist for Conformal {
    const KIND: &'static str = "conformal";
}

/// Normal CDF of a score standardized by the running score moments. The
/// score is absorbed before it is evaluated.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GaussianTail {
    count: u64,
    mean: f64,
    m2: f64,
}

impl GaussianTail {
    pub fn new() -> Self {
        Self::default()
    }

    /// State with pinned moments.
    pub fn with_moments(count: u64, mean: f64, variance: f64) -> Result<Self> {
        finite(mean)?;
        if !(variance.is_finite() && variance >= 0.0) {
            return Err(SadError::bad_parameter("variance must be finite and >= 0"));
        }
        Ok(GaussianTail {
            count,
            mean,
            m2: variance * count as f64,
        })
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.m2 / self.count as f64).max(0.0)
        }
    }

    /// Evaluates against the current moments without absorbing.
    pub fn probability(&self, score: f64) -> Result<f64> {
        let s = finite(score)?;
        if self.count == 0 {
            return Ok(0.5);
        }
        let z = z_value(s, self.mean, self.variance(), GAUSSIAN_TAIL_EPS);
        Ok(normal_cdf(z).clamp(0.0, 1.0))
    }

    pub fn calibrate(&mut self, score: f64) -> Result<f64> {
        let s = finite(score)?;
        self.count += 1;
        let delta = s - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (s - self.mean);
        self.probability(s)
    }
}

impl Persist for GaussianTail {
    const KIND: &'static str = "gaussian_tail";
}
