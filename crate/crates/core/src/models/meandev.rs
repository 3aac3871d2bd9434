//! Reference detector: average standardized distance from the running mean.

use serde::{Deserialize, Serialize};

use crate::detector::{Detector, Label, StreamShape};
use crate::error::Result;
use crate::state::Persist;
use crate::stats::RunningMoments;

const EPS: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanDeviation {
    seed: u64,
    shape: StreamShape,
    moments: RunningMoments,
}

impl MeanDeviation {
    pub fn new(seed: u64) -> Self {
        MeanDeviation {
            seed,
            shape: StreamShape::default(),
            moments: RunningMoments::default(),
        }
    }

    pub fn moments(&self) -> &RunningMoments {
        &self.moments
    }
}

impl Detector for MeanDeviation {
    fn fit_partial(&mut self, x: &[f64], _label: Option<Label>) -> Result<()> {
        if self.shape.admit(x)? {
            self.moments = RunningMoments::new(x.len());
        }
        self.moments.update(x);
        self.shape.record();
        Ok(())
    }

    fn score_partial(&self, x: &[f64]) -> Result<f64> {
        self.shape.check(x)?;
        if self.moments.count() == 0 {
            return Ok(0.0);
        }
        let total: f64 = x
            .iter()
            .enumerate()
            .map(|(j, &v)| {
                let mean = self.moments.mean()[j];
                (v - mean).abs() / self.moments.variance(j).sqrt().max(EPS)
            })
            .sum();
        Ok(total / x.len() as f64)
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

impl Persist for MeanDeviation {
    const KIND: &'static str = "meandev";
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::StreamBatch;

    fn fitted_1_3() -> MeanDeviation {
        let mut d = MeanDeviation::new(0);
        d.fit_partial(&[1.0], None).unwrap();
        d.fit_partial(&[3.0], None).unwrap();
        d
    }

    #[test]
    fn first_instance_sets_mean() {
        let mut d = MeanDeviation::new(0);
        d.fit_partial(&[1.0], None).unwrap();
        assert_eq!(d.moments().mean(), &[1.0]);
        assert_eq!(d.moments().count(), 1);
        assert_eq!(d.instances_seen(), 1);
    }

    #[test]
    fn welford_after_two() {
        let d = fitted_1_3();
        assert_eq!(d.moments().mean(), &[2.0]);
        assert_eq!(d.moments().variance(0), 1.0);
    }

    #[test]
    fn label_is_ignored() {
        let mut a = MeanDeviation::new(0);
        let mut b = MeanDeviation::new(0);
        a.fit_partial(&[1.5], Some(Label::Anomalous)).unwrap();
        b.fit_partial(&[1.5], None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn scores_against_fitted_state() {
        let d = fitted_1_3();
        assert_eq!(d.score_partial(&[2.0]).unwrap(), 0.0);
        assert_eq!(d.score_partial(&[4.0]).unwrap(), 2.0);
        assert_eq!(d.score_partial(&[4.0]).unwrap(), 2.0);
        let batch = StreamBatch::from_rows(vec![vec![2.0], vec![4.0]]).unwrap();
        assert_eq!(d.score(&batch).unwrap(), vec![0.0, 2.0]);
    }

    #[test]
    fn fresh_state_scores_zero() {
        assert_eq!(MeanDeviation::new(0).score_partial(&[7.0]).unwrap(), 0.0);
    }

    #[test]
    fn fit_score_partial_fits_first() {
        let mut d = MeanDeviation::new(0);
        assert_eq!(d.fit_score_partial(&[5.0], None).unwrap(), 0.0);
        let mut d = fitted_1_3();
        assert_eq!(d.fit_score_partial(&[2.0], None).unwrap(), 0.0);
        assert_eq!(d.moments().mean(), &[2.0]);
    }

    #[test]
    fn fit_score_batches() {
        let mut d = MeanDeviation::new(0);
        let batch = StreamBatch::from_rows(vec![vec![5.0], vec![5.0]]).unwrap();
        assert_eq!(d.fit_score(&batch).unwrap(), vec![0.0, 0.0]);

        let mut d = MeanDeviation::new(0);
        let batch = StreamBatch::from_rows(vec![vec![0.0], vec![2.0]]).unwrap();
        assert_eq!(d.fit_score(&batch).unwrap(), vec![0.0, 1.0]);
    }

    #[test]
    fn empty_batch_is_a_no_op() {
        let mut d = fitted_1_3();
        let before = d.clone();
        d.fit(&StreamBatch::default()).unwrap();
        assert_eq!(d, before);
        assert!(d.score(&StreamBatch::default()).unwrap().is_empty());
    }

    #[test]
    fn batch_error_reports_index_and_prefix_state() {
        use crate::error::SadError;
        let mut d = MeanDeviation::new(0);
        d.fit_partial(&[0.0], None).unwrap();
        let batch = StreamBatch::new(vec![
            crate::detector::Instance::new(0, vec![2.0], None).unwrap(),
            crate::detector::Instance {
                index: 1,
                features: vec![f64::NAN],
                label: None,
            },
        ])
        .unwrap();
        let err = d.fit_score(&batch).unwrap_err();
        assert_eq!(err.index, 1);
        assert_eq!(err.scores, vec![1.0]);
        assert_eq!(err.source, SadError::NonFiniteInput { position: 0 });
        assert_eq!(d.instances_seen(), 2);
    }

    #[test]
    fn multivariate_average() {
        let mut d = MeanDeviation::new(0);
        d.fit_partial(&[1.0, 0.0], None).unwrap();
        d.fit_partial(&[3.0, 0.0], None).unwrap();
        // dim 0: |4-2|/1 = 2; dim 1: |0-0|/eps = 0
        assert_eq!(d.score_partial(&[4.0, 0.0]).unwrap(), 1.0);
    }
}
