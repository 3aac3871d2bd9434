//! Stream data model and the incremental detector contract.
//!
//! A detector consumes a stream of feature vectors one at a time. The six
//! calls below are the whole contract: two primitives (`fit_partial`,
//! `score_partial`) that every detector implements, and four derived calls
//! whose default bodies are the definitions every detector must agree with.

use serde::{Deserialize, Serialize};

use crate::error::{check_finite, BatchError, Result, SadError};

/// Binary ground-truth label. Detectors accept it and ignore it; metrics use it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Normal,
    Anomalous,
}

impl Label {
    pub fn as_u8(self) -> u8 {
        match self {
            Label::Normal => 0,
            Label::Anomalous => 1,
        }
    }

    pub fn is_anomalous(self) -> bool {
        self == Label::Anomalous
    }
}

impl TryFrom<i64> for Label {
    type Error = SadError;

    fn try_from(value: i64) -> Result<Self> {
        match value {
            0 => Ok(Label::Normal),
            1 => Ok(Label::Anomalous),
            other => Err(SadError::BadLabel(other)),
        }
    }
}

/// One stream element.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub index: u64,
    pub features: Vec<f64>,
    pub label: Option<Label>,
}

impl Instance {
    pub fn new(index: u64, features: Vec<f64>, label: Option<Label>) -> Result<Self> {
        if features.is_empty() {
            return Err(SadError::EmptyInput);
        }
        check_finite(&features)?;
        Ok(Instance {
            index,
            features,
            label,
        })
    }

    pub fn dim(&self) -> usize {
        self.features.len()
    }
}

/// A finite run of instances with indices `0..n` in order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StreamBatch {
    instances: Vec<Instance>,
}

impl StreamBatch {
    /// Re-indexes `instances` to `0..n`; all must share one dimension.
    pub fn new(instances: Vec<Instance>) -> Result<Self> {
        let mut instances = instances;
        if let Some(first) = instances.first() {
            let dim = first.dim();
            if let Some(bad) = instances.iter().find(|x| x.dim() != dim) {
                return Err(SadError::DimensionMismatch {
                    expected: dim,
                    got: bad.dim(),
                });
            }
        }
        for (i, x) in instances.iter_mut().enumerate() {
            x.index = i as u64;
        }
        Ok(StreamBatch { instances })
    }

    /// Unlabeled batch from raw rows.
    pub fn from_rows<I>(rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = Vec<f64>>,
    {
        let instances = rows
            .into_iter()
            .enumerate()
            .map(|(i, row)| Instance::new(i as u64, row, None))
            .collect::<Result<Vec<_>>>()?;
        Self::new(instances)
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Instance> {
        self.instances.iter()
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }
}

impl<'a> IntoIterator for &'a StreamBatch {
    type Item = &'a Instance;
    type IntoIter = std::slice::Iter<'a, Instance>;

    fn into_iter(self) -> Self::IntoIter {
        self.instances.iter()
    }
}

/// Dimension binding and arrival counter shared by every detector.
///
/// The dimension is adopted from the first fitted instance and enforced
/// afterwards.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StreamShape {
    dim: Option<usize>,
    seen: u64,
}

impl StreamShape {
    pub fn dim(&self) -> Option<usize> {
        self.dim
    }

    pub fn seen(&self) -> u64 {
        self.seen
    }

    /// Validates `x` against the bound dimension without binding.
    pub fn check(&self, x: &[f64]) -> Result<()> {
        if x.is_empty() {
            return Err(SadError::EmptyInput);
        }
        check_finite(x)?;
        match self.dim {
            Some(expected) if expected != x.len() => Err(SadError::DimensionMismatch {
                expected,
                got: x.len(),
            }),
            _ => Ok(()),
        }
    }

    /// Validates `x` and binds the dimension if unbound. Returns `true` when
    /// this call performed the binding.
    pub fn admit(&mut self, x: &[f64]) -> Result<bool> {
        self.check(x)?;
        if self.dim.is_none() {
            self.dim = Some(x.len());
            return Ok(true);
        }
        Ok(false)
    }

    pub fn record(&mut self) {
        self.seen += 1;
    }
}

/// The incremental detector contract.
///
/// Scores follow one convention everywhere: higher means more anomalous.
/// `fit_*` calls mutate and need exclusive access; `score_*` calls are pure
/// reads.
pub trait Detector {
    /// Absorbs one instance. The label is accepted for interface symmetry
    /// and ignored by every unsupervised detector.
    fn fit_partial(&mut self, x: &[f64], label: Option<Label>) -> Result<()>;

    /// Scores `x` against the current state without changing it.
    fn score_partial(&self, x: &[f64]) -> Result<f64>;

    /// Fits first, then scores the same instance.
    fn fit_score_partial(&mut self, x: &[f64], label: Option<Label>) -> Result<f64> {
        self.fit_partial(x, label)?;
        self.score_partial(x)
    }

    fn fit(&mut self, batch: &StreamBatch) -> Result<(), BatchError> {
        for (index, x) in batch.iter().enumerate() {
            self.fit_partial(&x.features, x.label)
                .map_err(|source| BatchError {
                    index,
                    scores: Vec::new(),
                    source,
                })?;
        }
        Ok(())
    }

    fn score(&self, batch: &StreamBatch) -> Result<Vec<f64>, BatchError> {
        let mut scores = Vec::with_capacity(batch.len());
        for (index, x) in batch.iter().enumerate() {
            match self.score_partial(&x.features) {
                Ok(s) => scores.push(s),
                Err(source) => {
                    return Err(BatchError {
                        index,
                        scores,
                        source,
                    })
                }
            }
        }
        Ok(scores)
    }

    fn fit_score(&mut self, batch: &StreamBatch) -> Result<Vec<f64>, BatchError> {
        let mut scores = Vec::with_capacity(batch.len());
        for (index, x) in batch.iter().enumerate() {
            match self.fit_score_partial(&x.features, x.label) {
                Ok(s) => scores.push(s),
                Err(source) => {
                    return Err(BatchError {
                        index,
                        scores,
                        source,
                    })
                }
            }
        }
        Ok(scores)
    }

    /// Number of `fit_partial` calls absorbed so far.
    fn instances_seen(&self) -> u64;

    /// Dimension bound at the first fit, if any.
    fn dim(&self) -> Option<usize>;

    fn seed(&self) -> u64;

    /// Raw instances (or per-instance buffers) currently held.
    fn retained_instances(&self) -> usize;

    /// Declared upper bound on `retained_instances` in the current phase.
    fn memory_budget(&self) -> usize;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_from_integer() {
        assert_eq!(Label::try_from(0).unwrap(), Label::Normal);
        assert_eq!(Label::try_from(1).unwrap(), Label::Anomalous);
        assert_eq!(Label::try_from(2), Err(SadError::BadLabel(2)));
    }

    #[test]
    fn instance_rejects_nan_and_empty() {
        assert_eq!(
            Instance::new(0, vec![1.0, f64::NAN], None),
            Err(SadError::NonFiniteInput { position: 1 })
        );
        assert_eq!(Instance::new(0, vec![], None), Err(SadError::EmptyInput));
    }

    #[test]
    fn batch_reindexes_and_checks_dimension() {
        let a = Instance::new(7, vec![1.0], None).unwrap();
        let b = Instance::new(3, vec![2.0], None).unwrap();
        let batch = StreamBatch::new(vec![a, b]).unwrap();
        let idx: Vec<u64> = batch.iter().map(|x| x.index).collect();
        assert_eq!(idx, vec![0, 1]);

        let err = StreamBatch::from_rows(vec![vec![1.0], vec![1.0, 2.0]]).unwrap_err();
        assert_eq!(
            err,
            SadError::DimensionMismatch {
                expected: 1,
                got: 2
            }
        );
    }

    #[test]
    fn shape_binds_once() {
        let mut shape = StreamShape::default();
        assert!(shape.admit(&[1.0, 2.0]).unwrap());
        assert!(!shape.admit(&[3.0, 4.0]).unwrap());
        assert_eq!(
            shape.admit(&[1.0]),
            Err(SadError::DimensionMismatch {
                expected: 2,
                got: 1
            })
        );
        assert_eq!(
            shape.check(&[f64::INFINITY, 0.0]),
            Err(SadError::NonFiniteInput { position: 0 })
        );
    }
}
