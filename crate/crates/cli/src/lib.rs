//! Config-driven prequential runner.
//!
//! One TOML file describes the input stream, the pipeline, the metric and
//! the output paths. [`run`] replays the stream through
//! `Pipeline::fit_score_partial`, feeds labeled instances to the metric,
//! writes one scores row per instance and finally a report.
//!
//! ```toml
//! seed = 42
//! shuffle = false
//!
//! [input]
//! kind = "synthetic"
//! n = 1000
//! m = 2
//! rate = 0.05
//!
//! [[pipeline.detectors]]
//! kind = "loda"
//!
//! [metric]
//! kind = "auroc"
//!
//! [output]
//! scores = "scores.csv"
//! report = "report.toml"
//! ```

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use streamad::rng::derive_seed;
use streamad::stream::CsvOptions;
use streamad::{
    AurocMetric, Instance, LabelColumn, Pipeline, PipelineSpec, SadError, StreamSource,
    SyntheticSpec,
};
use thiserror::Error;

pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_STAGE: i32 = 3;

/// Slot used to derive the shuffle seed from the run seed.
const SHUFFLE_SLOT: u64 = u64::MAX;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("io error on {}: {message}", path.display())]
    Io { path: PathBuf, message: String },

    #[error("input error: {0}")]
    Input(SadError),

    #[error("instance {index}: {source}")]
    Stage { index: u64, source: SadError },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Io { .. } | CliError::Input(_) => EXIT_IO,
            CliError::Stage { .. } => EXIT_STAGE,
        }
    }

    fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            message: err.to_string(),
        }
    }
}

/// Where instances come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InputSpec {
    Synthetic {
        n: usize,
        m: usize,
        rate: f64,
    },
    Csv {
        path: PathBuf,
        #[serde(default)]
        label_column: LabelColumn,
        #[serde(default)]
        has_header: bool,
    },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    #[default]
    Auroc,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricSpec {
    #[serde(default)]
    pub kind: MetricKind,
    /// Evaluate over the last `window` labeled instances only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    #[serde(default)]
    pub shuffle: bool,
    pub input: InputSpec,
    pub pipeline: PipelineSpec,
    #[serde(default)]
    pub metric: MetricSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

impl RunConfig {
    /// Checks everything that can be checked without touching the input:
    /// stage parameters, ensemble rule and synthetic stream parameters.
    pub fn validate(&self) -> Result<(), CliError> {
        let fail = |e: SadError| CliError::Config(e.to_string());
        Pipeline::new(&self.pipeline, self.seed).map_err(fail)?;
        if let InputSpec::Synthetic { n, m, rate } = self.input {
            streamad::stream::SyntheticStream::new(self.synthetic_spec(n, m, rate))
                .map_err(fail)?;
        }
        if self.metric.window == Some(0) {
            return Err(CliError::Config("metric.window must be at least 1".into()));
        }
        Ok(())
    }

    /// Canonical TOML rendering used in the report and for the digest.
    pub fn echo(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.echo().as_bytes()))
    }

    fn synthetic_spec(&self, n: usize, m: usize, rate: f64) -> SyntheticSpec {
        SyntheticSpec {
            n,
            m,
            anomaly_rate: rate,
            seed: self.seed,
        }
    }

    /// Opens the configured stream, shuffled if requested.
    pub fn open_stream(&self) -> Result<StreamSource, CliError> {
        let source = match &self.input {
            InputSpec::Synthetic { n, m, rate } => {
                StreamSource::synthetic(self.synthetic_spec(*n, *m, *rate))
                    .map_err(|e| CliError::Config(e.to_string()))?
            }
            InputSpec::Csv {
                path,
                label_column,
                has_header,
            } => {
                let options = CsvOptions {
                    label_column: *label_column,
                    has_header: *has_header,
                };
                StreamSource::csv(path, &options).map_err(input_error)?
            }
        };
        source
            .iterate(self.shuffle, derive_seed(self.seed, SHUFFLE_SLOT))
            .map_err(input_error)
    }
}

fn input_error(e: SadError) -> CliError {
    match e {
        SadError::Io { path, message } => CliError::Io { path, message },
        other => CliError::Input(other),
    }
}

/// Parses and validates a config document.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let de = toml::Deserializer::parse(text).map_err(|e| CliError::Config(e.to_string()))?;
    let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::Config(format!("at `{path}`: {}", e.into_inner()))
    })?;
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig, CliError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_config(&text)
}

/// Command-line overrides. Only paths and the seed can be overridden.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub input: Option<PathBuf>,
    pub scores: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub seed: Option<u64>,
}

impl Overrides {
    pub fn apply(&self, config: &mut RunConfig) -> Result<(), CliError> {
        if let Some(p) = &self.input {
            match &mut config.input {
                InputSpec::Csv { path, .. } => *path = p.clone(),
                InputSpec::Synthetic { .. } => {
                    return Err(CliError::Config(
                        "--input needs a csv input section in the config".into(),
                    ))
                }
            }
        }
        if let Some(p) = &self.scores {
            config.output.scores = Some(p.clone());
        }
        if let Some(p) = &self.report {
            config.output.report = Some(p.clone());
        }
        if let Some(s) = self.seed {
            if s > i64::MAX as u64 {
                return Err(CliError::Config(format!(
                    "seed {s} exceeds the TOML integer range"
                )));
            }
            config.seed = s;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Write wall-clock seconds into the report. Off by default so reports
    /// are byte-identical across runs.
    pub timing: bool,
}

/// One processed instance.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoredInstance {
    pub index: u64,
    pub raw: f64,
    pub score: f64,
    pub label: Option<u8>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub n: u64,
    /// `None` when the stream has no labels or only one class.
    pub metric: Option<f64>,
    pub seconds: f64,
    pub digest: String,
}

impl RunSummary {
    pub fn summary_line(&self) -> String {
        match self.metric {
            Some(v) => format!("Area under ROC metric is {v}"),
            None => "Area under ROC metric is undefined".to_string(),
        }
    }
}

/// Formats `v` in plain decimal notation with 9 significant digits.
pub fn format_score(v: f64) -> String {
    if v == 0.0 {
        return "0.00000000".to_string();
    }
    let sci = format!("{:.8e}", v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => ("-", rest),
        None => ("", mantissa),
    };
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    let body = if exp < 0 {
        format!("0.{}{}", "0".repeat((-exp - 1) as usize), digits)
    } else if exp >= 8 {
        format!("{}{}", digits, "0".repeat((exp - 8) as usize))
    } else {
        let point = exp as usize + 1;
        format!("{}.{}", &digits[..point], &digits[point..])
    };
    format!("{sign}{body}")
}

struct ScoresWriter {
    path: PathBuf,
    out: BufWriter<File>,
}

impl ScoresWriter {
    fn create(path: &Path) -> Result<Self, CliError> {
        let file = File::create(path).map_err(|e| CliError::io(path, e))?;
        let mut w = ScoresWriter {
            path: path.to_path_buf(),
            out: BufWriter::new(file),
        };
        w.line("index,raw_score,final_score,label")?;
        Ok(w)
    }

    fn line(&mut self, s: &str) -> Result<(), CliError> {
        writeln!(self.out, "{s}").map_err(|e| CliError::io(&self.path, e))
    }

    fn row(&mut self, r: &ScoredInstance) -> Result<(), CliError> {
        let label = r.label.map(|l| l.to_string()).unwrap_or_default();
        let line = format!(
            "{},{},{},{}",
            r.index,
            format_score(r.raw),
            format_score(r.score),
            label
        );
        self.line(&line)
    }

    fn finish(mut self) -> Result<(), CliError> {
        self.out.flush().map_err(|e| CliError::io(&self.path, e))
    }
}

/// Prequential loop over any instance source; the metric sees the final score.
///
/// `sink` receives every scored instance before the next one is read, so a
/// failure leaves all earlier rows delivered.
pub fn prequential<I, F>(
    instances: I,
    pipeline: &mut Pipeline,
    metric: &mut AurocMetric,
    mut sink: F,
) -> Result<u64, CliError>
where
    I: IntoIterator<Item = streamad::Result<Instance>>,
    F: FnMut(&ScoredInstance) -> Result<(), CliError>,
{
    let mut n = 0;
    for item in instances {
        let x = item.map_err(input_error)?;
        let out = pipeline
            .fit_score_partial(&x.features, x.label)
            .map_err(|source| CliError::Stage {
                index: x.index,
                source,
            })?;
        if let Some(label) = x.label {
            metric
                .push(label, out.score)
                .map_err(|source| CliError::Stage {
                    index: x.index,
                    source,
                })?;
        }
        sink(&ScoredInstance {
            index: x.index,
            raw: out.raw,
            score: out.score,
            label: x.label.map(|l| l.as_u8()),
        })?;
        n += 1;
    }
    Ok(n)
}

fn report_text(config: &RunConfig, summary: &RunSummary, timing: bool) -> String {
    let mut table = toml::Table::new();
    table.insert("n".into(), toml::Value::Integer(summary.n as i64));
    table.insert("metric_name".into(), toml::Value::String("auroc".into()));
    table.insert(
        "metric_value".into(),
        match summary.metric {
            Some(v) => toml::Value::Float(v),
            None => toml::Value::String("undefined".into()),
        },
    );
    if timing {
        table.insert("seconds".into(), toml::Value::Float(summary.seconds));
    }
    table.insert("seed".into(), toml::Value::Integer(config.seed as i64));
    table.insert(
        "config_digest".into(),
        toml::Value::String(summary.digest.clone()),
    );
    let echo: toml::Table = toml::from_str(&config.echo()).expect("echo parses");
    table.insert("config".into(), toml::Value::Table(echo));
    toml::to_string(&table).expect("report serializes")
}

/// Runs the configured stream end to end and writes the output files.
///
/// On a stage or input error the scores file is flushed up to the failing
/// instance before the error is returned.
pub fn run(config: &RunConfig, options: &RunOptions) -> Result<RunSummary, CliError> {
    let start = Instant::now();
    let mut pipeline = Pipeline::new(&config.pipeline, config.seed)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let mut metric = match config.metric.window {
        Some(w) => AurocMetric::windowed(w).map_err(|e| CliError::Config(e.to_string()))?,
        None => AurocMetric::new(),
    };
    let stream = config.open_stream()?;
    let mut writer = match &config.output.scores {
        Some(p) => Some(ScoresWriter::create(p)?),
        None => None,
    };
    let result = prequential(stream, &mut pipeline, &mut metric, |r| {
        match writer.as_mut() {
            Some(w) => w.row(r),
            None => Ok(()),
        }
    });
    if let Some(w) = writer {
        w.finish()?;
    }
    let n = result?;
    let summary = RunSummary {
        n,
        metric: metric.get().ok(),
        seconds: start.elapsed().as_secs_f64(),
        digest: config.digest(),
    };
    if let Some(p) = &config.output.report {
        std::fs::write(p, report_text(config, &summary, options.timing))
            .map_err(|e| CliError::io(p, e))?;
    }
    Ok(summary)
}
