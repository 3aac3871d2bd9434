//! The shipped detectors and a closed enum over them for pipelines.

mod hst;
mod knn;
mod loda;
mod mahalanobis;
mod meandev;

pub use hst::{HalfSpaceTrees, HstParams, NodeMass};
pub use knn::{KnnParams, SlidingWindowKnn};
pub use loda::{bin_index, Histogram, Loda, LodaParams, Projection};
pub use mahalanobis::{Mahalanobis, DEFAULT_EPSILON as MAHALANOBIS_EPSILON};
pub use meandev::MeanDeviation;

use serde::{Deserialize, Serialize};

use crate::detector::{Detector, Label};
use crate::error::Result;
use crate::state::Persist;

fn default_mahalanobis_epsilon() -> f64 {
    MAHALANOBIS_EPSILON
}

/// Declarative detector choice with hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DetectorSpec {
    Loda {
        #[serde(default = "LodaDefaults::k")]
        k: usize,
        #[serde(default = "LodaDefaults::bins")]
        bins: usize,
        #[serde(default = "LodaDefaults::warmup")]
        warmup: usize,
    },
    Hst {
        #[serde(default = "HstDefaults::trees")]
        trees: usize,
        #[serde(default = "HstDefaults::depth")]
        depth: u32,
        #[serde(default = "HstDefaults::window")]
        window: usize,
        #[serde(default = "HstDefaults::range")]
        range: (f64, f64),
    },
    Knn {
        #[serde(default = "KnnDefaults::window")]
        window: usize,
        #[serde(default = "KnnDefaults::k")]
        k: usize,
    },
    Mahalanobis {
        #[serde(default = "default_mahalanobis_epsilon")]
        epsilon: f64,
    },
    Meandev {},
}

struct LodaDefaults;
impl LodaDefaults {
    fn k() -> usize {
        LodaParams::default().k
    }
    fn bins() -> usize {
        LodaParams::default().bins
    }
    fn warmup() -> usize {
        LodaParams::default().warmup
    }
}

struct HstDefaults;
impl HstDefaults {
    fn trees() -> usize {
        HstParams::default().trees
    }
    fn depth() -> u32 {
        HstParams::default().depth
    }
    fn window() -> usize {
        HstParams::default().window
    }
    fn range() -> (f64, f64) {
        HstParams::default().range
    }
}

struct KnnDefaults;
impl KnnDefaults {
    fn window() -> usize {
        KnnParams::default().window
    }
    fn k() -> usize {
        KnnParams::default().k
    }
}

impl DetectorSpec {
    pub fn loda() -> Self {
        let p = LodaParams::default();
        DetectorSpec::Loda {
            k: p.k,
            bins: p.bins,
            warmup: p.warmup,
        }
    }

    pub fn hst() -> Self {
        let p = HstParams::default();
        DetectorSpec::Hst {
            trees: p.trees,
            depth: p.depth,
            window: p.window,
            range: p.range,
        }
    }

    pub fn knn() -> Self {
        let p = KnnParams::default();
        DetectorSpec::Knn {
            window: p.window,
            k: p.k,
        }
    }

    pub fn mahalanobis() -> Self {
        DetectorSpec::Mahalanobis {
            epsilon: MAHALANOBIS_EPSILON,
        }
    }

    pub fn meandev() -> Self {
        DetectorSpec::Meandev {}
    }

    pub fn name(&self) -> &'static str {
        match self {
            DetectorSpec::Loda { .. } => "loda",
            DetectorSpec::Hst { .. } => "hst",
            DetectorSpec::Knn { .. } => "knn",
            DetectorSpec::Mahalanobis { .. } => "mahalanobis",
            DetectorSpec::Meandev {} => "meandev",
        }
    }

    pub fn build(&self, seed: u64) -> Result<AnyDetector> {
        Ok(match *self {
            DetectorSpec::Loda { k, bins, warmup } => {
                AnyDetector::Loda(Loda::new(LodaParams { k, bins, warmup }, seed)?)
            }
            DetectorSpec::Hst {
                trees,
                depth,
                window,
                range,
            } => AnyDetector::Hst(HalfSpaceTrees::new(
                HstParams {
                    trees,
                    depth,
                    window,
                    range,
                },
                seed,
            )?),
            DetectorSpec::Knn { window, k } => {
                AnyDetector::Knn(SlidingWindowKnn::new(KnnParams { window, k }, seed)?)
            }
            DetectorSpec::Mahalanobis { epsilon } => {
                AnyDetector::Mahalanobis(Mahalanobis::new(epsilon, seed)?)
            }
            DetectorSpec::Meandev {} => AnyDetector::MeanDev(MeanDeviation::new(seed)),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "state", rename_all = "snake_case")]
pub enum AnyDetector {
    Loda(Loda),
    Hst(HalfSpaceTrees),
    Knn(SlidingWindowKnn),
    Mahalanobis(Mahalanobis),
    #[serde(rename = "meandev")]
    MeanDev(MeanDeviation),
}

macro_rules! each {
    ($self:expr, $d:ident => $body:expr) => {
        match $self {
            AnyDetector::Loda($d) => $body,
            AnyDetector::Hst($d) => $body,
            AnyDetector::Knn($d) => $body,
            AnyDetector::Mahalanobis($d) => $body,
            AnyDetector::MeanDev($d) => $body,
        }
    };
}

impl Detector for AnyDetector {
    fn fit_partial(&mut self, x: &[f64], label: Option<Label>) -> Result<()> {
        each!(self, d => d.fit_partial(x, label))
    }

    fn score_partial(&self, x: &[f64]) -> Result<f64> {
        each!(self, d => d.score_partial(x))
    }

    fn instances_seen(&self) -> u64 {
        each!(self, d => d.instances_seen())
    }

    fn dim(&self) -> Option<usize> {
        each!(self, d => d.dim())
    }

    fn seed(&self) -> u64 {
        each!(self, d => d.seed())
    }

    fn retained_instances(&self) -> usize {
        each!(self, d => d.retained_instances())
    }

    fn memory_budget(&self) -> usize {
        each!(self, d => d.memory_budget())
    }
}

impl AnyDetector {
    pub fn name(&self) -> &'static str {
        match self {
            AnyDetector::Loda(_) => "loda",
            AnyDetector::Hst(_) => "hst",
            AnyDetector::Knn(_) => "knn",
            AnyDetector::Mahalanobis(_) => "mahalanobis",
            AnyDetector::MeanDev(_) => "meandev",
        }
    }
}

impl Persist for AnyDetector {
    const KIND: &'static str = "detector";
}
