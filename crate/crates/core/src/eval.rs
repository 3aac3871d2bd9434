//! Prequential AUROC.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::detector::Label;
use crate::error::{Result, SadError};
use crate::state::Persist;

/// Area under the ROC curve via the Mann-Whitney rank sum, tied scores
/// sharing their average rank.
///
/// Ranks are tracked doubled so every intermediate value is an integer and
/// the only rounding happens in the final division.
pub fn auroc(pairs: impl IntoIterator<Item = (Label, f64)>) -> Result<f64> {
    let mut pairs: Vec<(Label, f64)> = pairs.into_iter().collect();
    let positives = pairs.iter().filter(|(y, _)| y.is_anomalous()).count();
    let negatives = pairs.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(SadError::MetricUndefined {
            positives,
            negatives,
        });
    }
    pairs.sort_by(|a, b| a.1.total_cmp(&b.1));

    // Sum over positives of 2 * (average 1-based rank).
    let mut doubled_rank_sum: u128 = 0;
    let mut start = 0;
    while start < pairs.len() {
        let mut end = start + 1;
        while end < pairs.len() && pairs[end].1 == pairs[start].1 {
            end += 1;
        }
        let tied_positives = pairs[start..end]
            .iter()
            .filter(|(y, _)| y.is_anomalous())
            .count() as u128;
        // ranks start+1 ..= end average to (start + 1 + end) / 2
        doubled_rank_sum += tied_positives * (start as u128 + 1 + end as u128);
        start = end;
    }
    let p = positives as u128;
    let doubled_u = doubled_rank_sum - p * (p + 1);
    Ok(doubled_u as f64 / (2 * p * negatives as u128) as f64)
}

/// Accumulated `(label, score)` evidence; optionally only the newest
/// `window` pairs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AurocMetric {
    window: Option<usize>,
    pairs: VecDeque<(Label, f64)>,
    positives: usize,
    negatives: usize,
}

impl AurocMetric {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn windowed(window: usize) -> Result<Self> {
        if window == 0 {
            return Err(SadError::bad_parameter("metric window must be at least 1"));
        }
        Ok(AurocMetric {
            window: Some(window),
            ..Self::default()
        })
    }

    pub fn positives(&self) -> usize {
        self.positives
    }

    pub fn negatives(&self) -> usize {
        self.negatives
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (Label, f64)> + '_ {
        self.pairs.iter().copied()
    }

    /// Records one observation; `y_true` must be 0 or 1.
    pub fn update(&mut self, y_true: i64, score: f64) -> Result<()> {
        let label = Label::try_from(y_true)?;
        self.push(label, score)
    }

    pub fn push(&mut self, label: Label, score: f64) -> Result<()> {
        if !score.is_finite() {
            return Err(SadError::NonFiniteInput { position: 0 });
        }
        if self.window == Some(self.pairs.len()) {
            if let Some((old, _)) = self.pairs.pop_front() {
                self.count(old, false);
            }
        }
        self.pairs.push_back((label, score));
        self.count(label, true);
        Ok(())
    }

    fn count(&mut self, label: Label, add: bool) {
        let slot = if label.is_anomalous() {
            &mut self.positives
        } else {
            &mut self.negatives
        };
        if add {
            *slot += 1;
        } else {
            *slot -= 1;
        }
    }

    pub fn get(&self) -> Result<f64> {
        auroc(self.pairs())
    }
}

impl Persist for AurocMetric {
    const KIND: &'static str = "auroc";
}

#[cfg(test)]
mod tests {
    use super::*;

    fn metric(ys: &[i64], ss: &[f64]) -> AurocMetric {
        let mut m = AurocMetric::new();
        for (&y, &s) in ys.iter().zip(ss) {
            m.update(y, s).unwrap();
        }
        m
    }

    #[test]
    fn counts() {
        let mut m = AurocMetric::new();
        m.update(1, 0.9).unwrap();
        assert_eq!((m.positives(), m.negatives()), (1, 0));
        let m = metric(&[0, 1], &[0.1, 0.9]);
        assert_eq!((m.positives(), m.negatives(), m.len()), (1, 1, 2));
    }

    #[test]
    fn rejects_bad_label_and_score() {
        let mut m = AurocMetric::new();
        assert_eq!(m.update(2, 0.5), Err(SadError::BadLabel(2)));
        assert!(m.update(0, f64::NAN).is_err());
        assert!(m.is_empty());
    }

    #[test]
    fn worked_examples() {
        assert_eq!(metric(&[0, 1], &[0.1, 0.9]).get().unwrap(), 1.0);
        assert_eq!(metric(&[0, 1], &[0.9, 0.1]).get().unwrap(), 0.0);
        assert_eq!(
            metric(&[0, 0, 1, 1], &[0.2, 0.8, 0.8, 0.9]).get().unwrap(),
            0.875
        );
        assert_eq!(metric(&[0, 1, 0, 1], &[3.0; 4]).get().unwrap(), 0.5);
    }

    #[test]
    fn undefined_without_both_classes() {
        assert_eq!(
            metric(&[1, 1], &[0.1, 0.2]).get(),
            Err(SadError::MetricUndefined {
                positives: 2,
                negatives: 0
            })
        );
        assert!(AurocMetric::new().get().is_err());
    }

    #[test]
    fn window_evicts_oldest() {
        let mut m = AurocMetric::windowed(2).unwrap();
        m.update(1, 0.0).unwrap();
        m.update(0, 0.5).unwrap();
        assert_eq!(m.get().unwrap(), 0.0);
        m.update(1, 0.9).unwrap();
        assert_eq!((m.positives(), m.negatives(), m.len()), (1, 1, 2));
        assert_eq!(m.get().unwrap(), 1.0);
    }
}
