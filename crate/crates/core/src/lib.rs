//! Streaming anomaly detection.
//!
//! Detectors implement [`Detector`]: fit one instance at a time, score
//! without mutating, and derive the batch calls from those two. Around them
//! sit dimension-preserving preprocessors, fixed random projectors,
//! score ensemblers, smoothing postprocessors, probability calibrators and a
//! prequential AUROC metric, chained by [`Pipeline`].
//!
//! ```
//! use streamad::{generate_synthetic, AurocMetric, Detector, Loda, LodaParams};
//!
//! let mut model = Loda::new(LodaParams::default(), 42).unwrap();
//! let mut metric = AurocMetric::new();
//! for x in generate_synthetic(500, 2, 0.05, 42).unwrap() {
//!     let score = model.fit_score_partial(&x.features, x.label).unwrap();
//!     metric.push(x.label.unwrap(), score).unwrap();
//! }
//! println!("Area under ROC metric is {}.", metric.get().unwrap());
//! ```

pub mod detector;
pub mod ensemble;
pub mod error;
pub mod eval;
pub mod models;
pub mod pipeline;
pub mod postprocess;
pub mod rng;
pub mod state;
pub mod stats;
pub mod stream;
pub mod transform;

pub use detector::{Detector, Instance, Label, StreamBatch, StreamShape};
pub use ensemble::{combine, CombineStrategy};
pub use error::{BatchError, Result, SadError};
pub use eval::{auroc, AurocMetric};
pub use models::{
    AnyDetector, DetectorSpec, HalfSpaceTrees, HstParams, KnnParams, Loda, LodaParams, Mahalanobis,
    MeanDeviation, SlidingWindowKnn,
};
pub use pipeline::{Pipeline, PipelineOutput, PipelineSpec};
pub use postprocess::{normal_cdf, Conformal, Ewma, GaussianTail};
pub use state::Persist;
pub use stream::{generate_synthetic, CsvOptions, LabelColumn, StreamSource, SyntheticSpec};
pub use transform::{unit_norm, ProjectionKind, Projector, Standardizer};
