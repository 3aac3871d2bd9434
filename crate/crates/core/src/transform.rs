//! Instance-wise preprocessors and fixed random projectors.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_finite, Result, SadError};
use crate::rng;
use crate::state::Persist;
use crate::stats::{z_value, RunningMoments};

const STANDARDIZE_EPS: f64 = 1e-9;

/// Scales `x` to unit Euclidean length. The zero vector passes through.
pub fn unit_norm(x: &[f64]) -> Result<Vec<f64>> {
    check_finite(x)?;
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Ok(x.to_vec());
    }
    Ok(x.iter().map(|v| v / norm).collect())
}

/// Running per-coordinate z-scoring. Each call absorbs `x` first, then
/// standardizes it against the updated moments.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    moments: Option<RunningMoments>,
}

impl Standardizer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn moments(&self) -> Option<&RunningMoments> {
        self.moments.as_ref()
    }

    pub fn transform(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        if x.is_empty() {
            return Err(SadError::EmptyInput);
        }
        check_finite(x)?;
        if let Some(m) = &self.moments {
            if m.dim() != x.len() {
                return Err(SadError::DimensionMismatch {
                    expected: m.dim(),
                    got: x.len(),
                });
            }
        }
        let moments = self
            .moments
            .get_or_insert_with(|| RunningMoments::new(x.len()));
        moments.update(x);
        Ok(x.iter()
            .enumerate()
            .map(|(j, &v)| z_value(v, moments.mean()[j], moments.variance(j), STANDARDIZE_EPS))
            .collect())
    }
}

impl Persist for Standardizer {
    const KIND: &'static str = "standardizer";
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectionKind {
    /// Entries i.i.d. N(0, 1/d).
    Gaussian,
    /// Entries sqrt(3/d) * {+1, 0, -1} with probabilities {1/6, 2/3, 1/6}.
    Sparse,
}

/// A fixed `d x m` linear map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Projector {
    input_dim: usize,
    output_dim: usize,
    seed: u64,
    /// Row-major, `output_dim` rows of `input_dim` entries.
    matrix: Vec<f64>,
}

impl Projector {
    pub fn random(
        input_dim: usize,
        output_dim: usize,
        kind: ProjectionKind,
        seed: u64,
    ) -> Result<Self> {
        if input_dim == 0 || output_dim == 0 {
            return Err(SadError::bad_parameter(
                "projector dimensions must be at least 1",
            ));
        }
        let mut rng = rng::seeded(seed);
        let d = output_dim as f64;
        let len = input_dim * output_dim;
        let matrix = match kind {
            ProjectionKind::Gaussian => {
                let scale = 1.0 / d.sqrt();
                (0..len)
                    .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
                    .collect()
            }
            ProjectionKind::Sparse => {
                let scale = (3.0 / d).sqrt();
                (0..len)
                    .map(|_| {
                        let u: f64 = rng.random();
                        if u < 1.0 / 6.0 {
                            scale
                        } else if u < 2.0 / 6.0 {
                            -scale
                        } else {
                            0.0
                        }
                    })
                    .collect()
            }
        };
        Ok(Projector {
            input_dim,
            output_dim,
            seed,
            matrix,
        })
    }

    /// A projector with explicitly supplied rows (all of equal length).
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let output_dim = rows.len();
        let input_dim = rows.first().map_or(0, Vec::len);
        if output_dim == 0 || input_dim == 0 || rows.iter().any(|r| r.len() != input_dim) {
            return Err(SadError::bad_parameter(
                "projection rows must form a non-empty d x m matrix",
            ));
        }
        let matrix: Vec<f64> = rows.into_iter().flatten().collect();
        check_finite(&matrix)?;
        Ok(Projector {
            input_dim,
            output_dim,
            seed: 0,
            matrix,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim {
            return Err(SadError::DimensionMismatch {
                expected: self.input_dim,
                got: x.len(),
            });
        }
        check_finite(x)?;
        Ok(self
            .matrix
            .chunks_exact(self.input_dim)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }
}

impl Persist for Projector {
    const KIND: &'static str = "projector";
}
