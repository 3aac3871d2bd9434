//! Combining several detectors' scores for one instance.

use serde::{Deserialize, Serialize};

use crate::error::{check_finite, Result, SadError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CombineStrategy {
    Average,
    Maximum,
    Median,
}

/// Scale-naive combination; calibrate or standardize heterogeneous scores
/// before averaging them.
pub fn combine(scores: &[f64], strategy: CombineStrategy) -> Result<f64> {
    if scores.is_empty() {
        return Err(SadError::EmptyInput);
    }
    check_finite(scores)?;
    Ok(match strategy {
        CombineStrategy::Average => scores.iter().sum::<f64>() / scores.len() as f64,
        CombineStrategy::Maximum => scores.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        CombineStrategy::Median => {
            let mut sorted = scores.to_vec();
            sorted.sort_by(f64::total_cmp);
            let n = sorted.len();
            if n % 2 == 1 {
                sorted[n / 2]
            } else {
                0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use CombineStrategy::*;

    #[test]
    fn examples() {
        assert!((combine(&[0.2, 0.4], Average).unwrap() - 0.3).abs() < 1e-15);
        assert_eq!(combine(&[0.2, 0.4], Maximum).unwrap(), 0.4);
        assert_eq!(combine(&[1.0, 5.0, 100.0], Median).unwrap(), 5.0);
        assert_eq!(combine(&[100.0, 1.0, 3.0, 5.0], Median).unwrap(), 4.0);
        for s in [Average, Maximum, Median] {
            assert_eq!(combine(&[-2.5], s).unwrap(), -2.5);
        }
    }

    #[test]
    fn errors() {
        assert_eq!(combine(&[], Average), Err(SadError::EmptyInput));
        assert_eq!(
            combine(&[1.0, f64::INFINITY], Median),
            Err(SadError::NonFiniteInput { position: 1 })
        );
    }
}
