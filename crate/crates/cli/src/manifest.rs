//! Frozen experiment sweeps.

use std::fmt;
use std::str::FromStr;

use hqlip::classical::Norm;
use hqlip::train::{iris_model, train, Dataset, MetricsLog, TrainConfig, TrainMethod};
use hqlip::{Error, Result};
use rayon::prelude::*;
use serde::Deserialize;

const MANIFEST: &str = include_str!("../manifest/experiments.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentId {
    Figure1,
    Figure2,
    Figure3,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 3] = [ExperimentId::Figure1, ExperimentId::Figure2, ExperimentId::Figure3];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentId::Figure1 => "figure1",
            ExperimentId::Figure2 => "figure2",
            ExperimentId::Figure3 => "figure3",
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown experiment {s:?}")))
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub experiments: Vec<Experiment>,
}

/// One sweep: shared hyperparameters and a list of runs.
#[derive(Debug, Clone, Deserialize)]
pub struct Experiment {
    pub id: String,
    pub description: String,
    /// Relabel every row to this class before splitting.
    pub uniform_label: Option<usize>,
    /// Layers of the Iris circuit.
    pub layers: usize,
    pub epochs: usize,
    pub lr: f64,
    pub batch: usize,
    pub eps: f64,
    pub pgd_steps: usize,
    pub runs: Vec<Run>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
pub struct Run {
    pub method: TrainMethod,
    pub norm: Norm,
    pub lambda: f64,
}

impl Manifest {
    pub fn bundled() -> Self {
        serde_json::from_str(MANIFEST).expect("bundled manifest parses")
    }

    pub fn get(&self, id: ExperimentId) -> &Experiment {
        self.experiments
            .iter()
            .find(|e| e.id == id.as_str())
            .expect("every experiment id is in the manifest")
    }
}

impl Experiment {
    pub fn config(&self, run: &Run, seed: u64, epochs: Option<usize>) -> TrainConfig {
        TrainConfig {
            method: run.method,
            epochs: epochs.unwrap_or(self.epochs),
            lr: self.lr,
            batch: self.batch,
            lambda: run.lambda,
            eps: self.eps,
            pgd_steps: self.pgd_steps,
            step_size: None,
            norm: run.norm,
            seed,
        }
    }

    /// Runs every sweep point from the same initial model and split, and
    /// concatenates the logs in manifest order.
    pub fn execute(&self, seed: u64, epochs: Option<usize>) -> Result<MetricsLog> {
        let mut data = Dataset::iris(seed).scaled();
        if let Some(class) = self.uniform_label {
            data = data.with_uniform_labels(class);
        }
        let logs = self
            .runs
            .par_iter()
            .map(|run| {
                let mut model = iris_model(self.layers, seed)?;
                train(&mut model, &data, &self.config(run, seed, epochs))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut all = MetricsLog::default();
        logs.into_iter().for_each(|l| all.extend(l));
        Ok(all)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_declares_the_documented_sweeps() {
        let m = Manifest::bundled();
        assert_eq!(m.version, 1);
        let f1 = m.get(ExperimentId::Figure1);
        assert_eq!(f1.runs.iter().map(|r| r.norm).collect::<Vec<_>>(), Norm::ALL);
        assert_eq!(f1.uniform_label, Some(0));
        let lambdas: Vec<f64> = m.get(ExperimentId::Figure2).runs.iter().map(|r| r.lambda).collect();
        assert_eq!(lambdas, [0.0, 0.01, 0.1, 1.0, 10.0]);
        let methods: Vec<TrainMethod> = m.get(ExperimentId::Figure3).runs.iter().map(|r| r.method).collect();
        assert_eq!(methods, TrainMethod::ALL);
        for e in &m.experiments {
            e.id.parse::<ExperimentId>().unwrap();
            for r in &e.runs {
                e.config(r, 0, None).validate().unwrap();
            }
        }
    }
}
