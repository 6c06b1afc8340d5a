use std::f64::consts::PI;
use std::io::Read;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

const IRIS_CSV: &str = include_str!("../../assets/iris.csv");

/// Fraction of every class held out for testing.
pub const TEST_FRACTION: f64 = 0.2;

/// Labelled feature rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    /// Class names in index order.
    pub classes: Vec<String>,
    pub split_seed: u64,
}

/// Stratified train/test partition.
#[derive(Debug, Clone)]
pub struct Split {
    pub train: Dataset,
    pub test: Dataset,
}

impl Dataset {
    /// Parses numeric feature columns followed by one label column.
    ///
    /// A header row is detected when its first field is not a number. Labels
    /// that all parse as integers are used as class indices; otherwise names
    /// are numbered in order of first appearance.
    pub fn from_csv<R: Read>(reader: R, split_seed: u64) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut rows: Vec<(Vec<f64>, String)> = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.iter().all(str::is_empty) {
                continue;
            }
            if rec.len() < 2 {
                return Err(Error::Dataset(format!("row {i}: need features and a label")));
            }
            let fields: Vec<&str> = rec.iter().collect();
            let (feats, label) = fields.split_at(fields.len() - 1);
            let label = label[0].to_string();
            let parsed: std::result::Result<Vec<f64>, _> =
                feats.iter().map(|f| f.parse::<f64>()).collect();
            match parsed {
                Ok(x) => rows.push((x, label)),
                Err(_) if i == 0 => continue,
                Err(e) => return Err(Error::Dataset(format!("row {i}: {e}"))),
            }
        }
        let width = rows.first().map(|r| r.0.len()).ok_or_else(|| Error::Dataset("no rows".into()))?;
        if rows.iter().any(|r| r.0.len() != width) {
            return Err(Error::Dataset("rows have different feature counts".into()));
        }
        if rows.iter().flat_map(|r| &r.0).any(|v| !v.is_finite()) {
            return Err(Error::Dataset("non-finite feature".into()));
        }
        let numeric: Option<Vec<usize>> = rows.iter().map(|r| r.1.parse().ok()).collect();
        let (labels, classes) = match numeric {
            Some(idx) => {
                let n = idx.iter().max().map_or(0, |m| m + 1);
                (idx, (0..n).map(|c| c.to_string()).collect())
            }
            None => {
                let mut classes: Vec<String> = Vec::new();
                let labels = rows
                    .iter()
                    .map(|r| match classes.iter().position(|c| *c == r.1) {
                        Some(k) => k,
                        None => {
                            classes.push(r.1.clone());
                            classes.len() - 1
                        }
                    })
                    .collect();
                (labels, classes)
            }
        };
        Ok(Self {
            features: rows.into_iter().map(|r| r.0).collect(),
            labels,
            classes,
            split_seed,
        })
    }

    /// The bundled 150-row Iris table.
    pub fn iris(split_seed: u64) -> Self {
        Self::from_csv(IRIS_CSV.as_bytes(), split_seed).expect("bundled Iris table parses")
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_features(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    /// Per-feature min-max scaling onto `[0, π]`; constant columns map to 0.
    pub fn scaled(&self) -> Self {
        let n = self.num_features();
        let lo: Vec<f64> = (0..n)
            .map(|j| self.features.iter().map(|r| r[j]).fold(f64::INFINITY, f64::min))
            .collect();
        let hi: Vec<f64> = (0..n)
            .map(|j| self.features.iter().map(|r| r[j]).fold(f64::NEG_INFINITY, f64::max))
            .collect();
        let features = self
            .features
            .iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .map(|(j, v)| {
                        let span = hi[j] - lo[j];
                        if span > 0.0 {
                            PI * (v - lo[j]) / span
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        Self {
            features,
            ..self.clone()
        }
    }

    /// Every row relabelled to `class`.
    pub fn with_uniform_labels(&self, class: usize) -> Self {
        Self {
            labels: vec![class; self.len()],
            ..self.clone()
        }
    }

    /// 80-20 split within every class, deterministic in `split_seed`.
    pub fn split(&self) -> Result<Split> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.split_seed);
        let (mut train, mut test) = (Vec::new(), Vec::new());
        for c in 0..self.num_classes() {
            let mut idx: Vec<usize> = (0..self.len()).filter(|&i| self.labels[i] == c).collect();
            if idx.is_empty() {
                continue;
            }
            if idx.len() < 2 {
                return Err(Error::Dataset(format!("class {c} has a single row")));
            }
            idx.shuffle(&mut rng);
            let n_test = ((idx.len() as f64 * TEST_FRACTION).round() as usize).clamp(1, idx.len() - 1);
            test.extend_from_slice(&idx[..n_test]);
            train.extend_from_slice(&idx[n_test..]);
        }
        train.sort_unstable();
        test.sort_unstable();
        Ok(Split {
            train: self.subset(&train),
            test: self.subset(&test),
        })
    }

    fn subset(&self, idx: &[usize]) -> Self {
        Self {
            features: idx.iter().map(|&i| self.features[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            classes: self.classes.clone(),
            split_seed: self.split_seed,
        }
    }
}
