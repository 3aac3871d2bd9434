#![allow(dead_code)]

use rand::Rng;
use rand_distr::StandardNormal;
use streamad::rng::seeded;
use streamad::DetectorSpec;

/// Small-parameter versions of every detector so that warmup and window
/// boundaries are crossed within a few hundred instances.
pub fn small_specs() -> Vec<DetectorSpec> {
    vec![
        DetectorSpec::Loda {
            k: 8,
            bins: 20,
            warmup: 32,
        },
        DetectorSpec::Hst {
            trees: 5,
            depth: 6,
            window: 40,
            range: (-3.0, 3.0),
        },
        DetectorSpec::Knn { window: 30, k: 3 },
        DetectorSpec::mahalanobis(),
        DetectorSpec::meandev(),
    ]
}

pub fn default_specs() -> Vec<DetectorSpec> {
    vec![
        DetectorSpec::loda(),
        DetectorSpec::hst(),
        DetectorSpec::knn(),
        DetectorSpec::mahalanobis(),
        DetectorSpec::meandev(),
    ]
}

/// Rows with a mix of Gaussian bulk and occasional wide outliers.
pub fn random_rows(seed: u64, n: usize, m: usize) -> Vec<Vec<f64>> {
    let mut rng = seeded(seed);
    (0..n)
        .map(|_| {
            let wide = rng.random::<f64>() < 0.1;
            (0..m)
                .map(|_| {
                    if wide {
                        rng.random_range(-8.0..8.0)
                    } else {
                        rng.sample::<f64, _>(StandardNormal)
                    }
                })
                .collect()
        })
        .collect()
}
