//! Instance streams from CSV files and a seeded synthetic generator.

use std::fs::File;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::detector::{Instance, Label};
use crate::error::{Result, SadError};
use crate::rng::{self, SeededRng};

/// Which CSV column, if any, holds the 0/1 label.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelColumn {
    #[default]
    Last,
    None,
    /// Zero-based column index.
    Index(usize),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CsvOptions {
    pub label_column: LabelColumn,
    pub has_header: bool,
}

/// Lazily parsed CSV rows. Stops after the first error.
pub struct CsvStream {
    path: PathBuf,
    records: csv::StringRecordsIntoIter<File>,
    label_column: LabelColumn,
    dim: Option<usize>,
    next_index: u64,
    failed: bool,
}

impl std::fmt::Debug for CsvStream {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CsvStream")
            .field("path", &self.path)
            .field("label_column", &self.label_column)
            .field("dim", &self.dim)
            .field("next_index", &self.next_index)
            .finish()
    }
}

impl CsvStream {
    pub fn open(path: impl AsRef<Path>, options: &CsvOptions) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let file = File::open(&path).map_err(|e| SadError::Io {
            path: path.clone(),
            message: e.to_string(),
        })?;
        let records = csv::ReaderBuilder::new()
            .has_headers(options.has_header)
            .flexible(true)
            .from_reader(file)
            .into_records();
        Ok(CsvStream {
            path,
            records,
            label_column: options.label_column,
            dim: None,
            next_index: 0,
            failed: false,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    fn parse(&mut self, record: &csv::StringRecord) -> Result<Instance> {
        let line = record.position().map_or(0, csv::Position::line);
        let fail = |message: String| SadError::RowParse { line, message };
        let width = record.len();
        let label_at = match self.label_column {
            LabelColumn::None => None,
            LabelColumn::Last => Some(
                width
                    .checked_sub(1)
                    .ok_or_else(|| fail("empty row".into()))?,
            ),
            LabelColumn::Index(i) if i < width => Some(i),
            LabelColumn::Index(i) => {
                return Err(fail(format!(
                    "label column {i} missing from {width}-column row"
                )))
            }
        };
        let mut features = Vec::with_capacity(width);
        let mut label = None;
        for (col, cell) in record.iter().enumerate() {
            let cell = cell.trim();
            if Some(col) == label_at {
                label = Some(match cell {
                    "0" => Label::Normal,
                    "1" => Label::Anomalous,
                    other => return Err(fail(format!("label {other:?} is not 0 or 1"))),
                });
                continue;
            }
            let v: f64 = cell
                .parse()
                .map_err(|_| fail(format!("column {col}: {cell:?} is not a number")))?;
            if !v.is_finite() {
                return Err(fail(format!("column {col}: non-finite value {cell:?}")));
            }
            features.push(v);
        }
        if features.is_empty() {
            return Err(fail("row has no feature columns".into()));
        }
        match self.dim {
            Some(d) if d != features.len() => {
                return Err(fail(format!(
                    "row has {} features, expected {d}",
                    features.len()
                )))
            }
            None => self.dim = Some(features.len()),
            _ => {}
        }
        let index = self.next_index;
        self.next_index += 1;
        Ok(Instance {
            index,
            features,
            label,
        })
    }
}

impl Iterator for CsvStream {
    type Item = Result<Instance>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        let item = match self.records.next()? {
            Ok(record) => self.parse(&record),
            Err(e) => Err(SadError::RowParse {
                line: e.position().map_or(0, csv::Position::line),
                message: e.to_string(),
            }),
        };
        self.failed = item.is_err();
        Some(item)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n: usize,
    pub m: usize,
    pub anomaly_rate: f64,
    pub seed: u64,
}

/// Inliers ~ N(0, I_m); anomalies ~ U[-6, 6]^m; each instance is anomalous
/// independently with probability `anomaly_rate`.
#[derive(Clone, Debug)]
pub struct SyntheticStream {
    spec: SyntheticSpec,
    rng: SeededRng,
    next_index: usize,
}

pub const ANOMALY_BOX: f64 = 6.0;

impl SyntheticStream {
    pub fn new(spec: SyntheticSpec) -> Result<Self> {
        if spec.n == 0 || spec.m == 0 {
            return Err(SadError::bad_parameter(
                "synthetic n and m must be at least 1",
            ));
        }
        if !(0.0..=1.0).contains(&spec.anomaly_rate) {
            return Err(SadError::bad_parameter(format!(
                "anomaly rate must lie in [0, 1], got {}",
                spec.anomaly_rate
            )));
        }
        Ok(SyntheticStream {
            rng: rng::seeded(spec.seed),
            spec,
            next_index: 0,
        })
    }

    pub fn spec(&self) -> &SyntheticSpec {
        &self.spec
    }
}

impl Iterator for SyntheticStream {
    type Item = Result<Instance>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.next_index >= self.spec.n {
            return None;
        }
        let anomalous = self.rng.random::<f64>() < self.spec.anomaly_rate;
        let features: Vec<f64> = (0..self.spec.m)
            .map(|_| {
                if anomalous {
                    self.rng.random_range(-ANOMALY_BOX..ANOMALY_BOX)
                } else {
                    self.rng.sample(StandardNormal)
                }
            })
            .collect();
        let index = self.next_index as u64;
        self.next_index += 1;
        let label = if anomalous {
            Label::Anomalous
        } else {
            Label::Normal
        };
        Some(Ok(Instance {
            index,
            features,
            label: Some(label),
        }))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = self.spec.n - self.next_index;
        (left, Some(left))
    }
}

/// Ordered stream of instances from any supported origin.
#[derive(Debug)]
pub enum StreamSource {
    Csv(CsvStream),
    Synthetic(SyntheticStream),
    Memory(std::vec::IntoIter<Instance>),
}

impl StreamSource {
    pub fn csv(path: impl AsRef<Path>, options: &CsvOptions) -> Result<Self> {
        CsvStream::open(path, options).map(StreamSource::Csv)
    }

    pub fn synthetic(spec: SyntheticSpec) -> Result<Self> {
        SyntheticStream::new(spec).map(StreamSource::Synthetic)
    }

    pub fn from_instances(instances: Vec<Instance>) -> Self {
        StreamSource::Memory(instances.into_iter())
    }

    /// Yields every instance once; with `shuffle`, in a seeded uniformly
    /// random order with indices reassigned to `0..n`. Shuffling reads the
    /// whole source first.
    pub fn iterate(self, shuffle: bool, seed: u64) -> Result<StreamSource> {
        if !shuffle {
            return Ok(self);
        }
        let mut all = self.collect::<Result<Vec<_>>>()?;
        all.shuffle(&mut rng::seeded(seed));
        for (i, x) in all.iter_mut().enumerate() {
            x.index = i as u64;
        }
        Ok(StreamSource::from_instances(all))
    }
}

impl Iterator for StreamSource {
    type Item = Result<Instance>;

    fn next(&mut self) -> Option<Self::Item> {
        match self {
            StreamSource::Csv(s) => s.next(),
            StreamSource::Synthetic(s) => s.next(),
            StreamSource::Memory(s) => s.next().map(Ok),
        }
    }
}

/// Convenience wrapper: materialized synthetic stream.
pub fn generate_synthetic(
    n: usize,
    m: usize,
    anomaly_rate: f64,
    seed: u64,
) -> Result<Vec<Instance>> {
    SyntheticStream::new(SyntheticSpec {
        n,
        m,
        anomaly_rate,
        seed,
    })?
    .collect()
}
