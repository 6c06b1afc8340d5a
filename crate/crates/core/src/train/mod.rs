//! Mini-batch training of hybrid models with per-epoch certified bounds.

mod data;
mod grad;

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical::{ActivationKind, ClassicalMethod, DenseNet, Norm};
use crate::error::{Error, Result};
use crate::hybrid::{hybrid_lip_bound, Block, BoundOptions, HybridModel, QuantumBlock};
use crate::quantum::{CircuitSpec, PovmSpec};
use crate::stream_seed;

pub use data::{Dataset, Split, TEST_FRACTION};
pub use grad::{
    classical_grads, cross_entropy, dense_backward, lip_penalty, lip_penalty_grad, pgd_attack,
    quantum_grads, BlockGrad, LayerGrad, ModelGrad, Prepared, FEATURE_MAX, PENALTY_POWER_STEPS,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrainMethod {
    Naive,
    Pgd,
    Lipreg,
}

impl TrainMethod {
    pub const ALL: [TrainMethod; 3] = [TrainMethod::Naive, TrainMethod::Pgd, TrainMethod::Lipreg];

    pub fn as_str(self) -> &'static str {
        match self {
            TrainMethod::Naive => "naive",
            TrainMethod::Pgd => "pgd",
            TrainMethod::Lipreg => "lipreg",
        }
    }
}

impl fmt::Display for TrainMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TrainMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown training method {s:?}")))
    }
}

/// Hyperparameters of one training run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub method: TrainMethod,
    pub epochs: usize,
    pub lr: f64,
    pub batch: usize,
    pub lambda: f64,
    /// ℓ∞ radius of the PGD ball.
    pub eps: f64,
    pub pgd_steps: usize,
    /// PGD step; `None` means `eps / 4`.
    pub step_size: Option<f64>,
    /// Norm of the tracked bound and of the penalty.
    pub norm: Norm,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            method: TrainMethod::Naive,
            epochs: 200,
            lr: 0.05,
            batch: 16,
            lambda: 0.0,
            eps: 0.1,
            pgd_steps: 7,
            step_size: None,
            norm: Norm::L2,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.into()));
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return bad("lr must be positive");
        }
        if self.batch == 0 {
            return bad("batch must be at least 1");
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return bad("lambda must be non-negative");
        }
        if !(self.eps.is_finite() && self.eps >= 0.0) {
            return bad("eps must be non-negative");
        }
        if self.method == TrainMethod::Pgd && self.pgd_steps == 0 {
            return bad("pgd_steps must be at least 1");
        }
        if let Some(s) = self.step_size {
            if !(s.is_finite() && s > 0.0) {
                return bad("step_size must be positive");
            }
        }
        Ok(())
    }

    pub fn step_size(&self) -> f64 {
        self.step_size.unwrap_or(self.eps / 4.0)
    }
}

/// One evaluation row; column order is the CSV layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub epoch: usize,
    pub method: TrainMethod,
    pub norm: Norm,
    pub loss: f64,
    pub train_acc: f64,
    pub test_acc: f64,
    pub lip_classical: f64,
    pub lip_quantum: f64,
    pub lip_hybrid: f64,
    pub lambda: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsLog {
    pub rows: Vec<MetricsRow>,
}

impl MetricsLog {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn last(&self) -> Option<&MetricsRow> {
        self.rows.last()
    }

    pub fn extend(&mut self, other: MetricsLog) {
        self.rows.extend(other.rows);
    }

    /// Header plus one line per row.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
        wtr.write_record(MetricsLog::COLUMNS)?;
        for r in &self.rows {
            wtr.serialize(r)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        if header != MetricsLog::COLUMNS {
            return Err(Error::InvalidConfig(format!("unexpected metrics header {header:?}")));
        }
        let rows = rdr.deserialize().collect::<std::result::Result<Vec<MetricsRow>, _>>()?;
        Ok(Self { rows })
    }

    pub const COLUMNS: [&'static str; 11] = [
        "epoch",
        "method",
        "norm",
        "loss",
        "train_acc",
        "test_acc",
        "lip_classical",
        "lip_quantum",
        "lip_hybrid",
        "lambda",
        "seed",
    ];
}

/// Qubits of the Iris circuit.
pub const IRIS_QUBITS: usize = 3;

/// Dense 4→3 reduction, a layered 3-qubit circuit read out in the computational
/// basis, and a 8→8→3 ReLU head. Circuit angles start uniform in `[-π, π]`.
pub fn iris_model(layers: usize, seed: u64) -> Result<HybridModel> {
    let front = DenseNet::random(&[4, IRIS_QUBITS], ActivationKind::None, stream_seed(seed, 0))?;
    let ansatz = CircuitSpec::layered_ansatz(IRIS_QUBITS, layers, PovmSpec::default())?;
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, 1));
    let angles = (0..ansatz.params().len())
        .map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI))
        .collect();
    let circuit = ansatz.with_params(angles);
    let dim = circuit.outcomes();
    let head = DenseNet::random(&[dim, dim, 3], ActivationKind::Relu, stream_seed(seed, 2))?;
    HybridModel::new(vec![
        Block::Dense(front),
        Block::Quantum(QuantumBlock::new(circuit)),
        Block::Dense(head),
    ])
}

/// Loss and accuracy of a model on a dataset.
pub fn evaluate(m: &HybridModel, d: &Dataset) -> Result<(f64, f64)> {
    let prep = Prepared::new(m)?;
    evaluate_prepared(&prep, d)
}

fn evaluate_prepared(prep: &Prepared<'_>, d: &Dataset) -> Result<(f64, f64)> {
    if d.is_empty() {
        return Ok((0.0, 0.0));
    }
    let per = d
        .features
        .par_iter()
        .zip(&d.labels)
        .map(|(x, &y)| {
            let out = prep.forward(x)?;
            let hit = argmax(&out) == y;
            Ok((cross_entropy(&out, y).0, hit))
        })
        .collect::<Result<Vec<_>>>()?;
    let n = d.len() as f64;
    let loss = per.iter().map(|p| p.0).sum::<f64>() / n;
    let acc = per.iter().filter(|p| p.1).count() as f64 / n;
    Ok((loss, acc))
}

fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |b, (i, &x)| if x > b.1 { (i, x) } else { b })
        .0
}

/// Trains in place and returns one row per epoch, starting with the
/// untrained evaluation at epoch 0.
pub fn train(m: &mut HybridModel, d: &Dataset, cfg: &TrainConfig) -> Result<MetricsLog> {
    train_with(m, d, cfg, |_, _| Ok(()))
}

/// [`train`] with a hook called after every logged row.
pub fn train_with(
    m: &mut HybridModel,
    d: &Dataset,
    cfg: &TrainConfig,
    mut on_row: impl FnMut(&HybridModel, &MetricsRow) -> Result<()>,
) -> Result<MetricsLog> {
    cfg.validate()?;
    if d.num_features() != m.input_dim() {
        return Err(Error::dims(m.input_dim(), d.num_features()));
    }
    if d.num_classes() > m.output_dim() {
        return Err(Error::dims(m.output_dim(), d.num_classes()));
    }
    let Split { train, test } = d.split()?;
    let mut log = MetricsLog::default();
    let row = record(m, &train, &test, cfg, 0)?;
    on_row(m, &row)?;
    log.rows.push(row);

    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in 1..=cfg.epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(cfg.seed, epoch as u64));
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch) {
            let g = batch_grad(m, &train, batch, cfg)?;
            g.apply(m, cfg.lr);
        }
        let row = record(m, &train, &test, cfg, epoch)?;
        on_row(m, &row)?;
        log.rows.push(row);
    }
    Ok(log)
}

fn batch_grad(m: &HybridModel, d: &Dataset, batch: &[usize], cfg: &TrainConfig) -> Result<ModelGrad> {
    let prep = Prepared::new(m)?;
    let per = batch
        .par_iter()
        .map(|&i| {
            let (x, y) = (&d.features[i], d.labels[i]);
            let x = match cfg.method {
                TrainMethod::Pgd => prep.pgd(x, y, cfg.eps, cfg.pgd_steps, cfg.step_size())?,
                _ => x.clone(),
            };
            prep.sample_grad(&x, y, true).map(|r| r.1)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut g = ModelGrad::zeros(m);
    let scale = 1.0 / batch.len() as f64;
    for s in &per {
        g.add_scaled(s, scale);
    }
    if cfg.method == TrainMethod::Lipreg && cfg.lambda > 0.0 {
        g.add_scaled(&lip_penalty_grad(m, cfg.norm), cfg.lambda);
    }
    Ok(g)
}

fn record(m: &HybridModel, train: &Dataset, test: &Dataset, cfg: &TrainConfig, epoch: usize) -> Result<MetricsRow> {
    let prep = Prepared::new(m)?;
    let (loss, train_acc) = evaluate_prepared(&prep, train)?;
    let (_, test_acc) = evaluate_prepared(&prep, test)?;
    let bound = hybrid_lip_bound(
        m,
        &BoundOptions {
            norm: cfg.norm,
            classical: ClassicalMethod::Sdp,
            ..BoundOptions::default()
        },
    )?;
    Ok(MetricsRow {
        epoch,
        method: cfg.method,
        norm: cfg.norm,
        loss,
        train_acc,
        test_acc,
        lip_classical: bound.classical,
        lip_quantum: bound.quantum,
        lip_hybrid: bound.total,
        lambda: cfg.lambda,
        seed: cfg.seed,
    })
}
