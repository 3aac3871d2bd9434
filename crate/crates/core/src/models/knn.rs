//! Sliding-window k-nearest-neighbour distance.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::detector::{Detector, Label, StreamShape};
use crate::error::{Result, SadError};
use crate::state::Persist;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KnnParams {
    pub window: usize,
    pub k: usize,
}

impl Default for KnnParams {
    fn default() -> Self {
        KnnParams { window: 250, k: 5 }
    }
}

/// Scores an instance by its mean Euclidean distance to the `k` closest of
/// the last `window` fitted instances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlidingWindowKnn {
    params: KnnParams,
    seed: u64,
    shape: StreamShape,
    window: VecDeque<Vec<f64>>,
}

impl SlidingWindowKnn {
    pub fn new(params: KnnParams, seed: u64) -> Result<Self> {
        if params.window == 0 {
            return Err(SadError::bad_parameter("knn window must be at least 1"));
        }
        if params.k == 0 {
            return Err(SadError::bad_parameter("knn k must be at least 1"));
        }
        Ok(SlidingWindowKnn {
            window: VecDeque::with_capacity(params.window),
            params,
            seed,
            shape: StreamShape::default(),
        })
    }

    pub fn params(&self) -> &KnnParams {
        &self.params
    }

    /// Stored instances, oldest first.
    pub fn window(&self) -> impl Iterator<Item = &[f64]> {
        self.window.iter().map(Vec::as_slice)
    }
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

impl Detector for SlidingWindowKnn {
    fn fit_partial(&mut self, x: &[f64], _label: Option<Label>) -> Result<()> {
        self.shape.admit(x)?;
        if self.window.len() == self.params.window {
            self.window.pop_front();
        }
        self.window.push_back(x.to_vec());
        self.shape.record();
        Ok(())
    }

    fn score_partial(&self, x: &[f64]) -> Result<f64> {
        self.shape.check(x)?;
        if self.window.is_empty() {
            return Ok(0.0);
        }
        // Stable sort over the oldest-first window keeps ties in recency order.
        let mut dists: Vec<f64> = self.window.iter().map(|w| euclidean(w, x)).collect();
        dists.sort_by(f64::total_cmp);
        let k = self.params.k.min(dists.len());
        Ok(dists[..k].iter().sum::<f64>() / k as f64)
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
        self.window.len()
    }

    fn memory_budget(&self) -> usize {
        self.params.window
    }
}

impl Persist for SlidingWindowKnn {
    const KIND: &'static str = "knn";
}
