//! LODA: an ensemble of one-dimensional histograms over sparse random
//! projections.
//!
//! Each of the `k` projections keeps `ceil(sqrt(m))` standard-normal weights
//! at random coordinates. The first `warmup` projected values fix each
//! histogram's range (observed min/max widened by 10% per side); after that
//! every value lands in one of `bins` equal-width bins, clamped at the edges.
//! The score is the mean negative log of the Laplace-smoothed bin frequency.

use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::detector::{Detector, Label, StreamShape};
use crate::error::{check_finite, Result, SadError};
use crate::rng;
use crate::state::Persist;

const RANGE_EXPANSION: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LodaParams {
    /// Number of random projections.
    pub k: usize,
    pub bins: usize,
    /// Instances buffered before histogram ranges are frozen.
    pub warmup: usize,
}

impl Default for LodaParams {
    fn default() -> Self {
        LodaParams {
            k: 100,
            bins: 100,
            warmup: 256,
        }
    }
}

/// Sparse projection vector as `(coordinate, weight)` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Projection(Vec<(usize, f64)>);

impl Projection {
    pub fn apply(&self, x: &[f64]) -> f64 {
        self.0.iter().map(|&(j, w)| w * x[j]).sum()
    }

    pub fn weights(&self) -> &[(usize, f64)] {
        &self.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    lo: f64,
    hi: f64,
    counts: Vec<u64>,
    total: u64,
}

/// Bin of `z` among `bins` equal-width bins over `[lo, hi)`, clamped.
pub fn bin_index(z: f64, lo: f64, hi: f64, bins: usize) -> usize {
    let t = ((z - lo) / (hi - lo) * bins as f64).floor();
    if t <= 0.0 {
        0
    } else if t >= bins as f64 {
        bins - 1
    } else {
        t as usize
    }
}

impl Histogram {
    fn new(lo: f64, hi: f64, bins: usize) -> Self {
        Histogram {
            lo,
            hi,
            counts: vec![0; bins],
            total: 0,
        }
    }

    fn bin(&self, z: f64) -> usize {
        bin_index(z, self.lo, self.hi, self.counts.len())
    }

    fn add(&mut self, z: f64) {
        let b = self.bin(z);
        self.counts[b] += 1;
        self.total += 1;
    }

    fn neg_log_density(&self, z: f64) -> f64 {
        let c = self.counts[self.bin(z)] as f64;
        -((c + 1.0) / (self.total + self.counts.len() as u64) as f64).ln()
    }

    pub fn range(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Loda {
    params: LodaParams,
    seed: u64,
    shape: StreamShape,
    projections: Vec<Projection>,
    /// Projected values of the warmup instances, one row per instance.
    warmup_buffer: Vec<Vec<f64>>,
    /// Empty until warmup completes.
    histograms: Vec<Histogram>,
}

impl Loda {
    pub fn new(params: LodaParams, seed: u64) -> Result<Self> {
        if params.k == 0 || params.bins == 0 || params.warmup == 0 {
            return Err(SadError::bad_parameter(
                "loda k, bins and warmup must all be at least 1",
            ));
        }
        Ok(Loda {
            params,
            seed,
            shape: StreamShape::default(),
            projections: Vec::new(),
            warmup_buffer: Vec::new(),
            histograms: Vec::new(),
        })
    }

    /// A post-warmup state with explicit dense projection rows and every
    /// histogram over `[lo, hi)`. Bypasses all randomness.
    pub fn with_fixed_bins(
        projections: Vec<Vec<f64>>,
        lo: f64,
        hi: f64,
        bins: usize,
    ) -> Result<Self> {
        let k = projections.len();
        let m = projections.first().map_or(0, Vec::len);
        if k == 0 || m == 0 || projections.iter().any(|p| p.len() != m) {
            return Err(SadError::bad_parameter(
                "projections must be a non-empty k x m matrix",
            ));
        }
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(SadError::bad_parameter("bin range must satisfy lo < hi"));
        }
        for p in &projections {
            check_finite(p)?;
        }
        let mut state = Self::new(LodaParams { k, bins, warmup: 1 }, 0)?;
        state.shape.admit(&vec![0.0; m])?;
        state.projections = projections
            .into_iter()
            .map(|row| {
                Projection(
                    row.into_iter()
                        .enumerate()
                        .filter(|&(_, w)| w != 0.0)
                        .collect(),
                )
            })
            .collect();
        state.histograms = (0..k).map(|_| Histogram::new(lo, hi, bins)).collect();
        Ok(state)
    }

    pub fn params(&self) -> &LodaParams {
        &self.params
    }

    pub fn projections(&self) -> &[Projection] {
        &self.projections
    }

    pub fn histograms(&self) -> &[Histogram] {
        &self.histograms
    }

    pub fn in_warmup(&self) -> bool {
        self.histograms.is_empty()
    }

    fn draw_projections(&mut self, m: usize) {
        let mut rng = rng::seeded(self.seed);
        let nonzero = (m as f64).sqrt().ceil() as usize;
        self.projections = (0..self.params.k)
            .map(|_| {
                let mut coords = index::sample(&mut rng, m, nonzero).into_vec();
                coords.sort_unstable();
                Projection(
                    coords
                        .into_iter()
                        .map(|j| (j, rng.sample::<f64, _>(StandardNormal)))
                        .collect(),
                )
            })
            .collect();
    }

    fn finish_warmup(&mut self) {
        let bins = self.params.bins;
        self.histograms = (0..self.params.k)
            .map(|i| {
                let (min, max) = self
                    .warmup_buffer
                    .iter()
                    .map(|row| row[i])
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), z| {
                        (lo.min(z), hi.max(z))
                    });
                let pad = if max > min {
                    (max - min) * RANGE_EXPANSION
                } else {
                    0.5
                };
                let mut h = Histogram::new(min - pad, max + pad, bins);
                for row in &self.warmup_buffer {
                    h.add(row[i]);
                }
                h
            })
            .collect();
        self.warmup_buffer = Vec::new();
    }

    /// Warmup-phase score: unsmoothed histogram over the buffered range,
    /// with an empty bin floored at one count.
    fn warmup_score(&self, z: &[f64]) -> f64 {
        let n = self.warmup_buffer.len();
        if n < 2 {
            return 0.0;
        }
        let bins = self.params.bins;
        let total: f64 = z
            .iter()
            .enumerate()
            .map(|(i, &zi)| {
                let (lo, hi) = self
                    .warmup_buffer
                    .iter()
                    .map(|row| row[i])
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                        (lo.min(v), hi.max(v))
                    });
                let count = if hi > lo {
                    let target = bin_index(zi, lo, hi, bins);
                    self.warmup_buffer
                        .iter()
                        .filter(|row| bin_index(row[i], lo, hi, bins) == target)
                        .count()
                } else {
                    n
                };
                -(count.max(1) as f64 / n as f64).ln()
            })
            .sum();
        total / z.len() as f64
    }
}

impl Detector for Loda {
    fn fit_partial(&mut self, x: &[f64], _label: Option<Label>) -> Result<()> {
        if self.shape.admit(x)? {
            self.draw_projections(x.len());
        }
        let z: Vec<f64> = self.projections.iter().map(|p| p.apply(x)).collect();
        if self.in_warmup() {
            self.warmup_buffer.push(z);
            if self.warmup_buffer.len() >= self.params.warmup {
                self.finish_warmup();
            }
        } else {
            for (h, zi) in self.histograms.iter_mut().zip(z) {
                h.add(zi);
            }
        }
        self.shape.record();
        Ok(())
    }

    fn score_partial(&self, x: &[f64]) -> Result<f64> {
        self.shape.check(x)?;
        if self.projections.is_empty() {
            return Ok(0.0);
        }
        let z: Vec<f64> = self.projections.iter().map(|p| p.apply(x)).collect();
        if self.in_warmup() {
            return Ok(self.warmup_score(&z));
        }
        let total: f64 = self
            .histograms
            .iter()
            .zip(&z)
            .map(|(h, &zi)| h.neg_log_density(zi))
            .sum();
        Ok(total / self.histograms.len() as f64)
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
        self.warmup_buffer.len()
    }

    fn memory_budget(&self) -> usize {
        if self.in_warmup() {
            self.params.warmup
        } else {
            0
        }
    }
}

impl Persist for Loda {
    const KIND: &'static str = "loda";
}
