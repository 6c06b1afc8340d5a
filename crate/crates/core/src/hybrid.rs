//! Hybrid models alternating dense segments and measured quantum blocks.
//!
//! A quantum block angle-encodes its input vector, runs a circuit and returns
//! the outcome distribution. The certified bound multiplies one constant per
//! hop, with each hop tagged by the norm it reads and the norm it writes:
//!
//! ```text
//! dense (p -> p)  encoder (p -> trace)  circuit (trace -> tv)
//! tv -> l1 (x2)   l1 -> p (x1)          dense (p -> p) ...
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::classical::{lip_product, lip_sdp, ClassicalMethod, DenseLayer, DenseNet, Norm, SDP_BUDGET};
use crate::error::{Error, Result};
use crate::qlip::{lipschitz_exact, OUTCOME_LIMIT};
use crate::quantum::{angle_encode, measure_probs, CircuitSpec};
use crate::stream_seed;

/// Space a constant reads from or writes to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormTag {
    EuclideanL1,
    EuclideanL2,
    EuclideanLinf,
    Trace,
    TotalVariation,
}

impl NormTag {
    pub fn euclidean(self) -> Option<Norm> {
        match self {
            NormTag::EuclideanL1 => Some(Norm::L1),
            NormTag::EuclideanL2 => Some(Norm::L2),
            NormTag::EuclideanLinf => Some(Norm::Linf),
            NormTag::Trace | NormTag::TotalVariation => None,
        }
    }
}

impl From<Norm> for NormTag {
    fn from(n: Norm) -> Self {
        match n {
            Norm::L1 => NormTag::EuclideanL1,
            Norm::L2 => NormTag::EuclideanL2,
            Norm::Linf => NormTag::EuclideanLinf,
        }
    }
}

/// Classical-to-quantum encoding of a quantum block.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Encoding {
    /// `⊗_j RY(x_j)|0⟩`, one feature per qubit.
    #[default]
    #[serde(rename = "angle-ry")]
    AngleRy,
}

/// Encoder, circuit and probability readout.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuantumBlock {
    #[serde(default)]
    pub encoding: Encoding,
    #[serde(flatten)]
    pub circuit: CircuitSpec,
}

impl QuantumBlock {
    pub fn new(circuit: CircuitSpec) -> Self {
        Self {
            encoding: Encoding::AngleRy,
            circuit,
        }
    }

    pub fn inputs(&self) -> usize {
        self.circuit.qubits()
    }

    pub fn outputs(&self) -> usize {
        self.circuit.outcomes()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let rho = angle_encode(x, self.circuit.qubits())?;
        measure_probs(&self.circuit, &rho)
    }
}

#[derive(Debug, Clone)]
pub enum Block {
    Dense(DenseNet),
    Quantum(QuantumBlock),
}

impl Block {
    pub fn inputs(&self) -> usize {
        match self {
            Block::Dense(n) => n.input_dim(),
            Block::Quantum(q) => q.inputs(),
        }
    }

    pub fn outputs(&self) -> usize {
        match self {
            Block::Dense(n) => n.output_dim(),
            Block::Quantum(q) => q.outputs(),
        }
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            Block::Dense(n) => n.forward(x),
            Block::Quantum(q) => q.forward(x),
        }
    }
}

/// `f = f_{k+1} ∘ q_k ∘ ... ∘ q_1 ∘ f_1`; consecutive dense layers form one segment.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "ModelFile", into = "ModelFile")]
pub struct HybridModel {
    blocks: Vec<Block>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    blocks: Vec<Value>,
}

impl TryFrom<ModelFile> for HybridModel {
    type Error = Error;

    fn try_from(f: ModelFile) -> Result<Self> {
        let mut blocks = Vec::new();
        let mut pending: Vec<DenseLayer> = Vec::new();
        for (i, v) in f.blocks.into_iter().enumerate() {
            let kind = v.get("type").and_then(Value::as_str).unwrap_or("").to_string();
            match kind.as_str() {
                "dense" => pending.push(serde_json::from_value(v)?),
                "quantum" => {
                    if let Some(enc) = v.get("encoding").and_then(Value::as_str) {
                        if enc != "angle-ry" {
                            return Err(Error::UnsupportedEncoding(enc.to_string()));
                        }
                    }
                    if !pending.is_empty() {
                        blocks.push(Block::Dense(DenseNet::new(std::mem::take(&mut pending))?));
                    }
                    let mut v = v;
                    if let Some(obj) = v.as_object_mut() {
                        obj.remove("type");
                    }
                    blocks.push(Block::Quantum(serde_json::from_value(v)?));
                }
                other => {
                    return Err(Error::InvalidModel(format!("block {i}: unknown type `{other}`")))
                }
            }
        }
        if !pending.is_empty() {
            blocks.push(Block::Dense(DenseNet::new(pending)?));
        }
        HybridModel::new(blocks)
    }
}

impl From<HybridModel> for ModelFile {
    fn from(m: HybridModel) -> Self {
        let mut blocks = Vec::new();
        for b in m.blocks {
            match b {
                Block::Dense(net) => blocks.extend(
                    net.layers()
                        .iter()
                        .map(|l| serde_json::to_value(l).expect("layers serialize")),
                ),
                Block::Quantum(q) => {
                    let mut v = serde_json::to_value(&q).expect("quantum blocks serialize");
                    if let Some(obj) = v.as_object_mut() {
                        obj.insert("type".into(), Value::from("quantum"));
                    }
                    blocks.push(v);
                }
            }
        }
        ModelFile { blocks }
    }
}

impl HybridModel {
    pub fn new(blocks: Vec<Block>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidModel("model has no blocks".into()));
        }
        for pair in blocks.windows(2) {
            if pair[1].inputs() != pair[0].outputs() {
                return Err(Error::dims(pair[0].outputs(), pair[1].inputs()));
            }
        }
        Ok(Self { blocks })
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn blocks_mut(&mut self) -> &mut [Block] {
        &mut self.blocks
    }

    pub fn input_dim(&self) -> usize {
        self.blocks[0].inputs()
    }

    pub fn output_dim(&self) -> usize {
        self.blocks[self.blocks.len() - 1].outputs()
    }

    pub fn dense_layers(&self) -> impl Iterator<Item = &DenseLayer> {
        self.blocks.iter().flat_map(|b| match b {
            Block::Dense(n) => n.layers(),
            Block::Quantum(_) => &[],
        })
    }
}

pub fn hybrid_forward(m: &HybridModel, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != m.input_dim() {
        return Err(Error::dims(m.input_dim(), x.len()));
    }
    m.blocks
        .iter()
        .try_fold(x.to_vec(), |h, b| b.forward(&h))
}

/// Certified constant of the angle encoder from `in_norm` to trace distance.
///
/// Trace distance is subadditive over product states, and one qubit moves by
/// `|sin(Δθ/2)| <= |Δθ|/2`. This gives `||Δθ||₁ / 2`, then a norm conversion
/// to `in_norm`: ½ for l1, √q/2 for l2, q/2 for linf.
pub fn encoder_constant(qubits: usize, in_norm: NormTag) -> Result<f64> {
    let norm = in_norm.euclidean().ok_or_else(|| {
        Error::UnsupportedEncoding(format!("angle encoding cannot read {in_norm:?} inputs"))
    })?;
    Ok(0.5 * norm.conversion(Norm::L1, qubits))
}

/// One factor of the composed bound.
#[derive(Debug, Clone, Serialize)]
pub struct BlockConstant {
    pub block: usize,
    pub kind: String,
    pub constant: f64,
    pub method: String,
    pub input: NormTag,
    pub output: NormTag,
}

#[derive(Debug, Clone, Serialize)]
pub struct HybridBoundReport {
    pub total: f64,
    pub norm: Norm,
    pub per_block: Vec<BlockConstant>,
    /// Product of the dense-segment constants.
    pub classical: f64,
    /// Product of the circuit constants K*.
    pub quantum: f64,
    pub lower_witness: f64,
}

/// Settings of [`hybrid_lip_bound`].
#[derive(Debug, Clone, Copy)]
pub struct BoundOptions {
    pub norm: Norm,
    /// `Sdp` falls back to the product bound where LipSDP does not apply.
    pub classical: ClassicalMethod,
    pub sdp_budget: usize,
    /// Pairs for the sampled lower witness; 0 skips it.
    pub lower_samples: usize,
    pub seed: u64,
}

impl Default for BoundOptions {
    fn default() -> Self {
        Self {
            norm: Norm::L2,
            classical: ClassicalMethod::Sdp,
            sdp_budget: SDP_BUDGET,
            lower_samples: 0,
            seed: 0,
        }
    }
}

/// Certified upper bound on the Lipschitz constant of the whole model.
pub fn hybrid_lip_bound(m: &HybridModel, opts: &BoundOptions) -> Result<HybridBoundReport> {
    let norm = opts.norm;
    let p = NormTag::from(norm);
    let hops = m
        .blocks
        .par_iter()
        .enumerate()
        .map(|(i, b)| block_constants(i, b, opts, p))
        .collect::<Result<Vec<_>>>()?;
    let per_block: Vec<BlockConstant> = hops.into_iter().flatten().collect();
    let total = per_block.iter().map(|c| c.constant).product();
    let classical = per_block
        .iter()
        .filter(|c| c.kind == "dense")
        .map(|c| c.constant)
        .product();
    let quantum = per_block
        .iter()
        .filter(|c| c.kind == "circuit")
        .map(|c| c.constant)
        .product();
    let lower_witness = if opts.lower_samples > 0 {
        hybrid_lip_lower_in(m, opts.lower_samples, opts.seed, norm)?
    } else {
        0.0
    };
    Ok(HybridBoundReport {
        total,
        norm,
        per_block,
        classical,
        quantum,
        lower_witness,
    })
}

fn block_constants(i: usize, b: &Block, opts: &BoundOptions, p: NormTag) -> Result<Vec<BlockConstant>> {
    let hop = |kind: &str, constant: f64, method: &str, input, output| BlockConstant {
        block: i,
        kind: kind.into(),
        constant,
        method: method.into(),
        input,
        output,
    };
    match b {
        Block::Dense(net) => {
            let report = match (opts.classical, opts.norm) {
                (ClassicalMethod::Sdp, Norm::L2) => match lip_sdp(net, opts.sdp_budget) {
                    Err(Error::UseProductBound) => lip_product(net, opts.norm),
                    other => other?,
                },
                _ => lip_product(net, opts.norm),
            };
            Ok(vec![hop("dense", report.bound, report.method.as_str(), p, p)])
        }
        Block::Quantum(q) => {
            let enc = encoder_constant(q.inputs(), p)?;
            // Beyond the enumeration cap, contractivity still gives K* <= 1.
            let (k, method) = if q.outputs() <= OUTCOME_LIMIT {
                (lipschitz_exact(&q.circuit)?.k_star, "exact")
            } else {
                (1.0, "contractive")
            };
            Ok(vec![
                hop("encoder", enc, "angle-ry", p, NormTag::Trace),
                hop("circuit", k, method, NormTag::Trace, NormTag::TotalVariation),
                hop("conversion", 2.0, "tv-to-l1", NormTag::TotalVariation, NormTag::EuclideanL1),
                hop(
                    "conversion",
                    Norm::L1.conversion(opts.norm, q.outputs()),
                    "l1-to-output",
                    NormTag::EuclideanL1,
                    p,
                ),
            ])
        }
    }
}

/// Sampled lower bound `max ||f(x1) - f(x2)||₂ / ||x1 - x2||₂`.
pub fn hybrid_lip_lower(m: &HybridModel, samples: usize, seed: u64) -> Result<f64> {
    hybrid_lip_lower_in(m, samples, seed, Norm::L2)
}

/// Pairs are drawn in `[0, π]^n` with separations spread over four decades.
pub fn hybrid_lip_lower_in(m: &HybridModel, samples: usize, seed: u64, norm: Norm) -> Result<f64> {
    let ratios = (0..samples.max(1))
        .into_par_iter()
        .map(|s| {
            let (x1, x2) = sample_pair(m.input_dim(), stream_seed(seed, s as u64));
            pair_ratio(m, &x1, &x2, norm)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(ratios.into_iter().fold(0.0, f64::max))
}

/// Random input pair used by the sampled bounds.
pub fn sample_pair(n: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x1: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..std::f64::consts::PI)).collect();
    let radius = 10f64.powf(rng.random_range(-4.0..0.0));
    let dir: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let len = Norm::L2.of(&dir).max(f64::MIN_POSITIVE);
    let x2 = x1.iter().zip(&dir).map(|(a, d)| a + radius * d / len).collect();
    (x1, x2)
}

/// `||f(x1) - f(x2)|| / ||x1 - x2||` in one norm; 0 when the inputs coincide.
pub fn pair_ratio(m: &HybridModel, x1: &[f64], x2: &[f64], norm: Norm) -> Result<f64> {
    let dx: Vec<f64> = x1.iter().zip(x2).map(|(a, b)| a - b).collect();
    let den = norm.of(&dx);
    if den == 0.0 {
        return Ok(0.0);
    }
    let y1 = hybrid_forward(m, x1)?;
    let y2 = hybrid_forward(m, x2)?;
    let dy: Vec<f64> = y1.iter().zip(&y2).map(|(a, b)| a - b).collect();
    Ok(norm.of(&dy) / den)
}

#[cfg(test)]
mod tests {
    use nalgebra::{DMatrix, DVector};

    use super::*;
    use crate::classical::ActivationKind;
    use crate::quantum::{GateKind, GateSpec, Povm, PovmSpec};

    fn dense(w: DMatrix<f64>, act: ActivationKind) -> Block {
        let b = DVector::zeros(w.nrows());
        Block::Dense(DenseNet::new(vec![DenseLayer::new(w, b, act).unwrap()]).unwrap())
    }

    fn quantum(qubits: usize, gates: Vec<GateSpec>, povm: PovmSpec) -> Block {
        Block::Quantum(QuantumBlock::new(CircuitSpec::new(qubits, gates, povm, vec![]).unwrap()))
    }

    fn random_model(seed: u64) -> HybridModel {
        let pre = DenseNet::random(&[4, 3], ActivationKind::None, seed).unwrap();
        let circuit = CircuitSpec::random(3, 2, PovmSpec::contiguous(8, 4), seed + 1).unwrap();
        let post = DenseNet::random(&[4, 5, 2], ActivationKind::Relu, seed + 2).unwrap();
        HybridModel::new(vec![
            Block::Dense(pre),
            Block::Quantum(QuantumBlock::new(circuit)),
            Block::Dense(post),
        ])
        .unwrap()
    }

    #[test]
    fn identity_pipeline_reads_encoded_probabilities() {
        let m = HybridModel::new(vec![
            dense(DMatrix::identity(2, 2), ActivationKind::None),
            quantum(2, vec![], PovmSpec::default()),
            dense(DMatrix::identity(4, 4), ActivationKind::None),
        ])
        .unwrap();
        let x = [0.4, 2.1];
        let (c0, s0) = ((x[0] / 2.0f64).cos(), (x[0] / 2.0f64).sin());
        let (c1, s1) = ((x[1] / 2.0f64).cos(), (x[1] / 2.0f64).sin());
        let expect = [c0 * c0 * c1 * c1, c0 * c0 * s1 * s1, s0 * s0 * c1 * c1, s0 * s0 * s1 * s1];
        let y = hybrid_forward(&m, &x).unwrap();
        for (a, b) in y.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
        let zero = hybrid_forward(&m, &[0.0, 0.0]).unwrap();
        assert_eq!(zero, vec![1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn quantum_readout_is_a_distribution() {
        for seed in 0..10 {
            let c = CircuitSpec::random(3, 2, PovmSpec::contiguous(8, 3), seed).unwrap();
            let m = HybridModel::new(vec![
                Block::Dense(DenseNet::random(&[4, 3], ActivationKind::Tanh, seed).unwrap()),
                Block::Quantum(QuantumBlock::new(c)),
            ])
            .unwrap();
            let y = hybrid_forward(&m, &[0.1, 0.7, 1.9, 3.0]).unwrap();
            assert_eq!(y.len(), 3);
            assert!((y.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(y.iter().all(|p| *p >= 0.0));
        }
    }

    #[test]
    fn chaining_is_checked() {
        let bad = HybridModel::new(vec![
            dense(DMatrix::identity(3, 2), ActivationKind::None),
            quantum(2, vec![], PovmSpec::default()),
        ]);
        assert!(matches!(bad, Err(Error::DimensionMismatch { expected: 3, got: 2 })));
        let m = random_model(0);
        assert!(matches!(hybrid_forward(&m, &[0.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn encoder_constants() {
        assert!((encoder_constant(1, NormTag::EuclideanL1).unwrap() - 0.5).abs() < 1e-15);
        assert!((encoder_constant(3, NormTag::EuclideanL2).unwrap() - 3f64.sqrt() / 2.0).abs() < 1e-15);
        assert!((encoder_constant(3, NormTag::EuclideanLinf).unwrap() - 1.5).abs() < 1e-15);
        assert!(matches!(
            encoder_constant(2, NormTag::Trace),
            Err(Error::UnsupportedEncoding(_))
        ));
    }

    // Oracle: trace distance between the encoded density matrices.
    fn encoded_distance(a: &[f64], b: &[f64]) -> f64 {
        let ra = angle_encode(a, a.len()).unwrap();
        let rb = angle_encode(b, b.len()).unwrap();
        crate::quantum::trace_distance(&ra, &rb).unwrap()
    }

    #[test]
    fn encoder_constant_survives_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let single = encoder_constant(1, NormTag::EuclideanL1).unwrap();
        for _ in 0..100_000 {
            let (a, b): (f64, f64) = (rng.random_range(-7.0..7.0), rng.random_range(-7.0..7.0));
            assert!(encoded_distance(&[a], &[b]) <= single * (a - b).abs() + 1e-12);
        }
        for norm in Norm::ALL {
            let k = encoder_constant(3, norm.into()).unwrap();
            for _ in 0..5_000 {
                let a: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..3.2)).collect();
                let b: Vec<f64> = a.iter().map(|v| v + rng.random_range(-1.0..1.0)).collect();
                let d: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
                assert!(encoded_distance(&a, &b) <= k * norm.of(&d) + 1e-12);
            }
        }
        let a = [0.3, 1.1];
        assert!(encoded_distance(&a, &a).abs() < 1e-12);
    }

    #[test]
    fn total_is_the_product_of_hops() {
        let m = HybridModel::new(vec![
            dense(DMatrix::identity(1, 1) * 2.0, ActivationKind::None),
            quantum(1, vec![GateSpec::fixed(GateKind::H, 0)], PovmSpec::default()),
            dense(DMatrix::identity(2, 2) * 0.5, ActivationKind::None),
        ])
        .unwrap();
        let r = hybrid_lip_bound(&m, &BoundOptions::default()).unwrap();
        let product: f64 = r.per_block.iter().map(|c| c.constant).product();
        assert!((product - r.total).abs() <= 1e-12 * r.total.max(1.0));
        // 2 (dense) * 1/2 (encoder) * 1 (K*) * 2 (tv->l1) * 1 (l1->l2) * 1/2 (dense)
        assert!((r.total - 1.0).abs() < 1e-9, "{}", r.total);
        assert!((r.classical - 1.0).abs() < 1e-12);
        assert!((r.quantum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn single_outcome_readout_has_zero_bound() {
        let povm = Povm::grouped(2, &[vec![0, 1]]).unwrap();
        assert_eq!(povm.len(), 1);
        let m = HybridModel::new(vec![
            dense(DMatrix::identity(1, 1) * 3.0, ActivationKind::None),
            quantum(1, vec![], PovmSpec::Groups { groups: vec![vec![0, 1]] }),
        ])
        .unwrap();
        let r = hybrid_lip_bound(&m, &BoundOptions::default()).unwrap();
        assert!(r.total.abs() < 1e-12);
        assert_eq!(hybrid_lip_lower(&m, 50, 0).unwrap(), 0.0);
    }

    #[test]
    fn affine_models_are_probed_tightly() {
        let w = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, -0.5, 0.3]);
        let m = HybridModel::new(vec![dense(w.clone(), ActivationKind::None)]).unwrap();
        let top = w.svd(false, false).singular_values.max();
        let low = hybrid_lip_lower(&m, 2000, 4).unwrap();
        assert!(low <= top + 1e-9 && low >= 0.95 * top, "{low} vs {top}");
        let r = hybrid_lip_bound(&m, &BoundOptions::default()).unwrap();
        assert!((r.total - top).abs() < 1e-9);
    }

    #[test]
    fn sampled_pairs_respect_the_bound() {
        for seed in 0..8 {
            let m = random_model(seed);
            for norm in Norm::ALL {
                let opts = BoundOptions {
                    norm,
                    ..BoundOptions::default()
                };
                let r = hybrid_lip_bound(&m, &opts).unwrap();
                for s in 0..200 {
                    let (a, b) = sample_pair(4, stream_seed(seed, s));
                    let dx: Vec<f64> = a.iter().zip(&b).map(|(p, q)| p - q).collect();
                    let ya = hybrid_forward(&m, &a).unwrap();
                    let yb = hybrid_forward(&m, &b).unwrap();
                    let dy: Vec<f64> = ya.iter().zip(&yb).map(|(p, q)| p - q).collect();
                    assert!(norm.of(&dy) <= r.total * norm.of(&dx) + 1e-8);
                }
                assert!(hybrid_lip_lower_in(&m, 300, seed, norm).unwrap() <= r.total + 1e-8);
            }
        }
    }

    #[test]
    fn product_method_scales_with_weights() {
        let m = random_model(3);
        let opts = BoundOptions {
            classical: ClassicalMethod::Product,
            ..BoundOptions::default()
        };
        let base = hybrid_lip_bound(&m, &opts).unwrap();
        let mut scaled = m.clone();
        if let Block::Dense(net) = &mut scaled.blocks_mut()[2] {
            net.layers_mut()[0].weights *= 3.0;
        }
        let after = hybrid_lip_bound(&scaled, &opts).unwrap();
        let (b0, b1) = (&base.per_block, &after.per_block);
        let last = b0.len() - 1;
        assert!((b1[last].constant - 3.0 * b0[last].constant).abs() <= 1e-12 * b1[last].constant);
        assert!((after.total - 3.0 * base.total).abs() <= 1e-9 * after.total);
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{"blocks": [
            {"type": "dense", "weights": [[1, 0], [0, 1]], "bias": [0, 0], "activation": "none"},
            {"type": "quantum", "qubits": 2, "encoding": "angle-ry",
             "gates": [{"name": "ry", "target": 0, "param": {"kind": "trainable", "index": 0}},
                       {"name": "cnot", "control": 0, "target": 1}],
             "povm": {"groups": [[0, 1], [2, 3]]}, "params": [0.3]},
            {"type": "dense", "weights": [[2, 0]], "bias": [0.5], "activation": "none"}
        ]}"#;
        let m: HybridModel = serde_json::from_str(text).unwrap();
        assert_eq!((m.input_dim(), m.output_dim()), (2, 1));
        let back: HybridModel = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        let x = [0.2, 1.3];
        assert_eq!(hybrid_forward(&m, &x).unwrap(), hybrid_forward(&back, &x).unwrap());
        let bad = text.replace("angle-ry", "amplitude");
        assert!(matches!(
            serde_json::from_str::<HybridModel>(&bad),
            Err(e) if e.to_string().contains("unsupported encoding")
        ));
    }
}
