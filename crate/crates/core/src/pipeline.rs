//! Preprocess -> project -> detect -> ensemble -> postprocess -> calibrate.
//!
//! Every stage except the detectors is optional; a missing stage is the
//! identity. All stages are advanced exactly once per instance.

use serde::{Deserialize, Serialize};

use crate::detector::{Detector, Label};
use crate::ensemble::{combine, CombineStrategy};
use crate::error::{Result, SadError};
use crate::models::{AnyDetector, DetectorSpec};
use crate::postprocess::{Conformal, Ewma, GaussianTail};
use crate::rng::derive_seed;
use crate::state::Persist;
use crate::transform::{unit_norm, ProjectionKind, Projector, Standardizer};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PreprocessorSpec {
    UnitNorm,
    Standardize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectorSpec {
    pub d: usize,
    pub kind: ProjectionKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    pub strategy: CombineStrategy,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PostprocessorSpec {
    Ewma { alpha: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CalibratorSpec {
    Conformal { window: usize },
    GaussianTail,
}

/// Declarative stage chain.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preprocessor: Option<PreprocessorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub projector: Option<ProjectorSpec>,
    pub detectors: Vec<DetectorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<EnsembleSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub postprocessors: Vec<PostprocessorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibrator: Option<CalibratorSpec>,
}

impl PipelineSpec {
    pub fn single(detector: DetectorSpec) -> Self {
        PipelineSpec {
            detectors: vec![detector],
            ..Self::default()
        }
    }

    /// Checks the structural rules: at least one detector, and an ensemble
    /// exactly when there is more than one.
    pub fn validate(&self) -> Result<()> {
        match (self.detectors.len(), self.ensemble.is_some()) {
            (0, _) => Err(SadError::bad_parameter(
                "pipeline needs at least one detector",
            )),
            (1, true) => Err(SadError::bad_parameter(
                "ensemble given for a single detector",
            )),
            (n, false) if n > 1 => Err(SadError::bad_parameter(format!(
                "{n} detectors need an ensemble strategy"
            ))),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Preprocessor {
    UnitNorm,
    Standardize(Standardizer),
}

impl Preprocessor {
    pub fn apply(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            Preprocessor::UnitNorm => unit_norm(x),
            Preprocessor::Standardize(s) => s.transform(x),
        }
    }
}

/// Projector whose matrix is drawn when the input dimension is first seen.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectorStage {
    spec: ProjectorSpec,
    seed: u64,
    projector: Option<Projector>,
}

impl ProjectorStage {
    pub fn new(spec: ProjectorSpec, seed: u64) -> Result<Self> {
        if spec.d == 0 {
            return Err(SadError::bad_parameter("projector d must be at least 1"));
        }
        Ok(ProjectorStage {
            spec,
            seed,
            projector: None,
        })
    }

    pub fn projector(&self) -> Option<&Projector> {
        self.projector.as_ref()
    }

    pub fn apply(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        if self.projector.is_none() {
            self.projector = Some(Projector::random(
                x.len(),
                self.spec.d,
                self.spec.kind,
                self.seed,
            )?);
        }
        self.projector
            .as_ref()
            .map_or(Ok(Vec::new()), |p| p.project(x))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Postprocessor {
    Ewma(Ewma),
}

impl Postprocessor {
    pub fn apply(&mut self, s: f64) -> Result<f64> {
        match self {
            Postprocessor::Ewma(e) => e.update(s),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Calibrator {
    Conformal(Conformal),
    GaussianTail(GaussianTail),
}

impl Calibrator {
    pub fn apply(&mut self, s: f64) -> Result<f64> {
        match self {
            Calibrator::Conformal(c) => c.calibrate(s),
            Calibrator::GaussianTail(g) => g.calibrate(s),
        }
    }
}

/// Scores of one instance: the detector (or ensemble) output and the score
/// after postprocessing and calibration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PipelineOutput {
    pub raw: f64,
    pub score: f64,
}

/// Live stage states for a [`PipelineSpec`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pipeline {
    seed: u64,
    preprocessor: Option<Preprocessor>,
    projector: Option<ProjectorStage>,
    detectors: Vec<AnyDetector>,
    ensemble: Option<CombineStrategy>,
    postprocessors: Vec<Postprocessor>,
    calibrator: Option<Calibrator>,
}

impl Pipeline {
    /// Seeds: the projector draws from child slot 0 and detector `i` from
    /// child slot `i + 1` of `seed`.
    pub fn new(spec: &PipelineSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let preprocessor = spec.preprocessor.map(|p| match p {
            PreprocessorSpec::UnitNorm => Preprocessor::UnitNorm,
            PreprocessorSpec::Standardize => Preprocessor::Standardize(Standardizer::new()),
        });
        let projector = spec
            .projector
            .map(|p| ProjectorStage::new(p, derive_seed(seed, 0)))
            .transpose()?;
        let detectors = spec
            .detectors
            .iter()
            .enumerate()
            .map(|(i, d)| d.build(derive_seed(seed, i as u64 + 1)))
            .collect::<Result<Vec<_>>>()?;
        let postprocessors = spec
            .postprocessors
            .iter()
            .map(|p| match *p {
                PostprocessorSpec::Ewma { alpha } => Ewma::new(alpha).map(Postprocessor::Ewma),
            })
            .collect::<Result<Vec<_>>>()?;
        let calibrator = spec
            .calibrator
            .map(|c| match c {
                CalibratorSpec::Conformal { window } => {
                    Conformal::new(window).map(Calibrator::Conformal)
                }
                CalibratorSpec::GaussianTail => Ok(Calibrator::GaussianTail(GaussianTail::new())),
            })
            .transpose()?;
        Ok(Pipeline {
            seed,
            preprocessor,
            projector,
            detectors,
            ensemble: spec.ensemble.map(|e| e.strategy),
            postprocessors,
            calibrator,
        })
    }

    /// A pipeline assembled from already-built stages.
    pub fn from_stages(
        preprocessor: Option<Preprocessor>,
        projector: Option<ProjectorStage>,
        detectors: Vec<AnyDetector>,
        ensemble: Option<CombineStrategy>,
        postprocessors: Vec<Postprocessor>,
        calibrator: Option<Calibrator>,
    ) -> Result<Self> {
        if detectors.is_empty() {
            return Err(SadError::bad_parameter(
                "pipeline needs at least one detector",
            ));
        }
        if detectors.len() > 1 && ensemble.is_none() {
            return Err(SadError::bad_parameter(
                "several detectors need an ensemble strategy",
            ));
        }
        Ok(Pipeline {
            seed: 0,
            preprocessor,
            projector,
            detectors,
            ensemble,
            postprocessors,
            calibrator,
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn detectors(&self) -> &[AnyDetector] {
        &self.detectors
    }

    pub fn calibrator(&self) -> Option<&Calibrator> {
        self.calibrator.as_ref()
    }

    /// Runs one instance through every stage, fitting each stateful stage
    /// before it produces output.
    pub fn fit_score_partial(&mut self, x: &[f64], label: Option<Label>) -> Result<PipelineOutput> {
        let mut features = x.to_vec();
        if let Some(p) = &mut self.preprocessor {
            features = p.apply(&features).map_err(|e| e.in_stage("preprocessor"))?;
        }
        if let Some(p) = &mut self.projector {
            features = p.apply(&features).map_err(|e| e.in_stage("projector"))?;
        }
        if let Some(d) = self.detectors.first() {
            // Validate against every detector before any of them mutates.
            if let Some(expected) = d.dim() {
                if expected != features.len() {
                    return Err(SadError::DimensionMismatch {
                        expected,
                        got: features.len(),
                    }
                    .in_stage("detector"));
                }
            }
        }
        let mut scores = Vec::with_capacity(self.detectors.len());
        for d in &mut self.detectors {
            let name = d.name();
            scores.push(
                d.fit_score_partial(&features, label)
                    .map_err(|e| e.in_stage(name))?,
            );
        }
        let raw = match self.ensemble {
            Some(strategy) => combine(&scores, strategy).map_err(|e| e.in_stage("ensemble"))?,
            None => scores[0],
        };
        let mut score = raw;
        for p in &mut self.postprocessors {
            score = p.apply(score).map_err(|e| e.in_stage("postprocessor"))?;
        }
        if let Some(c) = &mut self.calibrator {
            score = c.apply(score).map_err(|e| e.in_stage("calibrator"))?;
        }
        Ok(PipelineOutput { raw, score })
    }
}

impl Persist for Pipeline {
    const KIND: &'static str = "pipeline";
}
