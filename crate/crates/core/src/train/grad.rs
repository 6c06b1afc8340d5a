use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, DVector};

use crate::classical::{DenseNet, ForwardTrace, Norm};
use crate::error::{Error, Result};
use crate::hybrid::{Block, HybridModel, QuantumBlock};
use crate::numerics::ComplexMatrix;
use crate::quantum::{
    angle_amplitudes, observables_for_unitary, probabilities_from_observables, CircuitSpec,
    DensityOperator, Param,
};

/// Power-iteration steps of the spectral penalty.
pub const PENALTY_POWER_STEPS: usize = 5;

/// Upper end of the feature box `[0, π]`.
pub const FEATURE_MAX: f64 = PI;

/// Weight and bias gradients of one dense layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
}

/// Gradient of one model block.
#[derive(Debug, Clone, PartialEq)]
pub enum BlockGrad {
    Dense(Vec<LayerGrad>),
    Quantum(Vec<f64>),
}

/// Gradient with respect to every trainable parameter of a hybrid model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelGrad {
    pub blocks: Vec<BlockGrad>,
}

impl ModelGrad {
    pub fn zeros(m: &HybridModel) -> Self {
        let blocks = m
            .blocks()
            .iter()
            .map(|b| match b {
                Block::Dense(net) => BlockGrad::Dense(
                    net.layers()
                        .iter()
                        .map(|l| LayerGrad {
                            weights: DMatrix::zeros(l.outputs(), l.inputs()),
                            bias: DVector::zeros(l.outputs()),
                        })
                        .collect(),
                ),
                Block::Quantum(q) => BlockGrad::Quantum(vec![0.0; q.circuit.params().len()]),
            })
            .collect();
        Self { blocks }
    }

    /// `self += s * other`.
    pub fn add_scaled(&mut self, other: &ModelGrad, s: f64) {
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            match (a, b) {
                (BlockGrad::Dense(x), BlockGrad::Dense(y)) => {
                    for (p, q) in x.iter_mut().zip(y) {
                        p.weights += &q.weights * s;
                        p.bias += &q.bias * s;
                    }
                }
                (BlockGrad::Quantum(x), BlockGrad::Quantum(y)) => {
                    x.iter_mut().zip(y).for_each(|(p, q)| *p += s * q);
                }
                _ => unreachable!("gradients of one model share a layout"),
            }
        }
    }

    /// Gradient step `θ -= lr * g` applied to a model.
    pub fn apply(&self, m: &mut HybridModel, lr: f64) {
        for (b, g) in m.blocks_mut().iter_mut().zip(&self.blocks) {
            match (b, g) {
                (Block::Dense(net), BlockGrad::Dense(gs)) => {
                    for (l, gl) in net.layers_mut().iter_mut().zip(gs) {
                        l.weights -= &gl.weights * lr;
                        l.bias -= &gl.bias * lr;
                    }
                }
                (Block::Quantum(q), BlockGrad::Quantum(gq)) => {
                    let params = q.circuit.params().iter().zip(gq).map(|(p, d)| p - lr * d).collect();
                    q.circuit = q.circuit.with_params(params);
                }
                _ => unreachable!("gradients of one model share a layout"),
            }
        }
    }
}

/// Softmax cross-entropy and its gradient with respect to the logits.
pub fn cross_entropy(logits: &[f64], target: usize) -> (f64, Vec<f64>) {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    let loss = total.ln() + max - logits[target];
    let grad = exps
        .iter()
        .enumerate()
        .map(|(i, e)| e / total - f64::from(u8::from(i == target)))
        .collect();
    (loss, grad)
}

/// Reverse pass through a dense segment given `upstream = dL/d(output)`.
///
/// Returns the layer gradients and `dL/d(input)`.
pub fn dense_backward(net: &DenseNet, trace: &ForwardTrace, upstream: &[f64]) -> (Vec<LayerGrad>, Vec<f64>) {
    let mut delta = DVector::from_column_slice(upstream);
    let mut grads = Vec::with_capacity(net.layers().len());
    for (k, l) in net.layers().iter().enumerate().rev() {
        let dz = delta.zip_map(&trace.pre[k], |d, z| d * l.activation.derivative(z));
        grads.push(LayerGrad {
            weights: &dz * trace.activations[k].transpose(),
            bias: dz.clone(),
        });
        delta = l.weights.transpose() * dz;
    }
    grads.reverse();
    (grads, delta.iter().copied().collect())
}

/// Cross-entropy gradients of a dense network by reverse accumulation.
pub fn classical_grads(net: &DenseNet, x: &[f64], target: usize) -> Result<Vec<LayerGrad>> {
    if target >= net.output_dim() {
        return Err(Error::dims(net.output_dim(), target + 1));
    }
    let trace = net.forward_trace(x)?;
    let out: Vec<f64> = trace.activations.last().expect("output").iter().copied().collect();
    let (_, up) = cross_entropy(&out, target);
    Ok(dense_backward(net, &trace, &up).0)
}

// Gate indices with a trainable slot, checked for shift-rule support.
fn shiftable_gates(c: &CircuitSpec) -> Result<Vec<(usize, usize)>> {
    c.gates()
        .iter()
        .enumerate()
        .filter_map(|(g, spec)| match spec.param {
            Some(Param::Trainable { index }) => Some((g, index, spec)),
            _ => None,
        })
        .map(|(g, index, spec)| {
            if spec.name.is_rotation() {
                Ok((g, index))
            } else {
                Err(Error::UnsupportedGateParam(spec.name.name().into()))
            }
        })
        .collect()
}

/// Parameter-shift gradient of `Σ_i upstream_i p_i(θ)` over the trainable slots.
///
/// Each rotation occurrence contributes `½[p(θ_g + π/2) − p(θ_g − π/2)]`, and
/// occurrences sharing a slot are summed.
pub fn quantum_grads(c: &CircuitSpec, rho: &DensityOperator, upstream: &[f64]) -> Result<Vec<f64>> {
    if upstream.len() != c.outcomes() {
        return Err(Error::dims(c.outcomes(), upstream.len()));
    }
    let angles = c.gate_angles()?;
    let mut grad = vec![0.0; c.params().len()];
    for (g, slot) in shiftable_gates(c)? {
        let mut shifted = angles.clone();
        let mut side = |delta: f64| -> Result<Vec<f64>> {
            shifted[g] = angles[g] + delta;
            let obs = observables_for_unitary(c.povm(), &c.unitary_with_angles(&shifted));
            probabilities_from_observables(&obs, rho)
        };
        let plus = side(FRAC_PI_2)?;
        let minus = side(-FRAC_PI_2)?;
        grad[slot] += 0.5
            * upstream
                .iter()
                .zip(plus.iter().zip(&minus))
                .map(|(u, (p, m))| u * (p - m))
                .sum::<f64>();
    }
    Ok(grad)
}

/// Real parts of Heisenberg observables, row-major; real amplitudes only see these.
struct RealObservables {
    dim: usize,
    mats: Vec<Vec<f64>>,
}

impl RealObservables {
    fn new(obs: &[ComplexMatrix]) -> Self {
        Self {
            dim: obs[0].rows(),
            mats: obs.iter().map(ComplexMatrix::real_parts).collect(),
        }
    }

    fn expectations(&self, psi: &[f64]) -> Vec<f64> {
        let n = self.dim;
        self.mats
            .iter()
            .map(|a| {
                (0..n)
                    .map(|r| psi[r] * (0..n).map(|c| a[r * n + c] * psi[c]).sum::<f64>())
                    .sum()
            })
            .collect()
    }
}

// Observables of a quantum block at its current angles and at every shift.
struct PreparedCircuit {
    base: RealObservables,
    shifts: Vec<(usize, RealObservables, RealObservables)>,
}

impl PreparedCircuit {
    fn new(q: &QuantumBlock) -> Result<Self> {
        let c = &q.circuit;
        let angles = c.gate_angles()?;
        let at = |a: &[f64]| RealObservables::new(&observables_for_unitary(c.povm(), &c.unitary_with_angles(a)));
        let shifts = shiftable_gates(c)?
            .into_iter()
            .map(|(g, slot)| {
                let mut a = angles.clone();
                a[g] = angles[g] + FRAC_PI_2;
                let plus = at(&a);
                a[g] = angles[g] - FRAC_PI_2;
                (slot, plus, at(&a))
            })
            .collect();
        Ok(Self {
            base: at(&angles),
            shifts,
        })
    }
}

/// A model frozen for one optimizer step, with circuit observables precomputed.
pub struct Prepared<'a> {
    model: &'a HybridModel,
    circuits: Vec<Option<PreparedCircuit>>,
}

enum BlockTrace {
    Dense(ForwardTrace),
    Quantum(Vec<f64>),
}

impl<'a> Prepared<'a> {
    pub fn new(model: &'a HybridModel) -> Result<Self> {
        let circuits = model
            .blocks()
            .iter()
            .map(|b| match b {
                Block::Quantum(q) => PreparedCircuit::new(q).map(Some),
                Block::Dense(_) => Ok(None),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { model, circuits })
    }

    pub fn model(&self) -> &HybridModel {
        self.model
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_traced(x)?.0)
    }

    fn forward_traced(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<BlockTrace>)> {
        if x.len() != self.model.input_dim() {
            return Err(Error::dims(self.model.input_dim(), x.len()));
        }
        let mut h = x.to_vec();
        let mut traces = Vec::with_capacity(self.circuits.len());
        for (b, prep) in self.model.blocks().iter().zip(&self.circuits) {
            match (b, prep) {
                (Block::Dense(net), _) => {
                    let t = net.forward_trace(&h)?;
                    h = t.activations.last().expect("output").iter().copied().collect();
                    traces.push(BlockTrace::Dense(t));
                }
                (Block::Quantum(_), Some(p)) => {
                    let out = p.base.expectations(&angle_amplitudes(&h));
                    traces.push(BlockTrace::Quantum(std::mem::replace(&mut h, out)));
                }
                (Block::Quantum(_), None) => unreachable!("quantum blocks are prepared"),
            }
        }
        Ok((h, traces))
    }

    /// Loss, parameter gradient and input gradient for one labelled sample.
    pub fn sample_grad(&self, x: &[f64], target: usize, want_params: bool) -> Result<(f64, ModelGrad, Vec<f64>)> {
        let (out, traces) = self.forward_traced(x)?;
        if target >= out.len() {
            return Err(Error::dims(out.len(), target + 1));
        }
        let (loss, mut up) = cross_entropy(&out, target);
        let mut grad = ModelGrad::zeros(self.model);
        for (k, (b, trace)) in self.model.blocks().iter().zip(&traces).enumerate().rev() {
            match (b, trace) {
                (Block::Dense(net), BlockTrace::Dense(t)) => {
                    let (lg, down) = dense_backward(net, t, &up);
                    grad.blocks[k] = BlockGrad::Dense(lg);
                    up = down;
                }
                (Block::Quantum(_), BlockTrace::Quantum(input)) => {
                    let p = self.circuits[k].as_ref().expect("prepared");
                    let dot = |obs: &RealObservables, psi: &[f64]| -> f64 {
                        obs.expectations(psi).iter().zip(&up).map(|(e, u)| e * u).sum()
                    };
                    if want_params {
                        let psi = angle_amplitudes(input);
                        let BlockGrad::Quantum(g) = &mut grad.blocks[k] else {
                            unreachable!("layout matches model")
                        };
                        for (slot, plus, minus) in &p.shifts {
                            g[*slot] += 0.5 * (dot(plus, &psi) - dot(minus, &psi));
                        }
                    }
                    // Angle encoding is RY, so the same shift rule gives input gradients.
                    let mut down = vec![0.0; input.len()];
                    let mut shifted = input.clone();
                    for j in 0..input.len() {
                        shifted[j] = input[j] + FRAC_PI_2;
                        let hi = dot(&p.base, &angle_amplitudes(&shifted));
                        shifted[j] = input[j] - FRAC_PI_2;
                        let lo = dot(&p.base, &angle_amplitudes(&shifted));
                        shifted[j] = input[j];
                        down[j] = 0.5 * (hi - lo);
                    }
                    up = down;
                }
                _ => unreachable!("trace matches model"),
            }
        }
        Ok((loss, grad, up))
    }

    pub fn loss(&self, x: &[f64], target: usize) -> Result<f64> {
        let out = self.forward(x)?;
        if target >= out.len() {
            return Err(Error::dims(out.len(), target + 1));
        }
        Ok(cross_entropy(&out, target).0)
    }

    /// Sign-gradient ascent inside the `eps` ℓ∞ ball and the feature box.
    ///
    /// Returns the highest-loss iterate seen, starting with `x` itself.
    pub fn pgd(&self, x: &[f64], target: usize, eps: f64, steps: usize, step_size: f64) -> Result<Vec<f64>> {
        let mut best = (self.loss(x, target)?, x.to_vec());
        if eps <= 0.0 {
            return Ok(best.1);
        }
        let mut cur = x.to_vec();
        for _ in 0..steps {
            let (_, _, g) = self.sample_grad(&cur, target, false)?;
            for (j, v) in cur.iter_mut().enumerate() {
                let s = if g[j] > 0.0 {
                    1.0
                } else if g[j] < 0.0 {
                    -1.0
                } else {
                    0.0
                };
                *v = (*v + step_size * s)
                    .clamp(x[j] - eps, x[j] + eps)
                    .clamp(0.0, FEATURE_MAX);
            }
            let l = self.loss(&cur, target)?;
            if l > best.0 {
                best = (l, cur.clone());
            }
        }
        Ok(best.1)
    }
}

/// PGD adversarial example for one labelled input.
pub fn pgd_attack(
    m: &HybridModel,
    x: &[f64],
    target: usize,
    eps: f64,
    steps: usize,
    step_size: f64,
) -> Result<Vec<f64>> {
    Prepared::new(m)?.pgd(x, target, eps, steps, step_size)
}

/// `Σ ||W||²` over dense layers, with induced norms (l2 by five power steps).
pub fn lip_penalty(m: &HybridModel, norm: Norm) -> f64 {
    m.dense_layers().map(|l| penalty_term(&l.weights, norm).0).sum()
}

/// Gradient of [`lip_penalty`]; the maximizing direction is held fixed.
pub fn lip_penalty_grad(m: &HybridModel, norm: Norm) -> ModelGrad {
    let mut g = ModelGrad::zeros(m);
    for (b, gb) in m.blocks().iter().zip(g.blocks.iter_mut()) {
        if let (Block::Dense(net), BlockGrad::Dense(layers)) = (b, gb) {
            for (l, gl) in net.layers().iter().zip(layers.iter_mut()) {
                gl.weights = penalty_term(&l.weights, norm).1;
            }
        }
    }
    g
}

// Squared induced norm and its gradient.
fn penalty_term(w: &DMatrix<f64>, norm: Norm) -> (f64, DMatrix<f64>) {
    let (rows, cols) = w.shape();
    match norm {
        Norm::L2 => {
            // Start from the heaviest row: it always overlaps the top right singular vector.
            let (i, n0) = argmax(w.row_iter().map(|r| r.norm()));
            if n0 == 0.0 {
                return (0.0, DMatrix::zeros(rows, cols));
            }
            let mut v: DVector<f64> = w.row(i).transpose() / n0;
            for _ in 0..PENALTY_POWER_STEPS {
                let next = w.transpose() * (w * &v);
                let n = next.norm();
                if n == 0.0 {
                    return (0.0, DMatrix::zeros(rows, cols));
                }
                v = next / n;
            }
            let wv = w * &v;
            let sigma = wv.norm();
            if sigma == 0.0 {
                return (0.0, DMatrix::zeros(rows, cols));
            }
            let u = wv / sigma;
            (sigma * sigma, &u * v.transpose() * (2.0 * sigma))
        }
        Norm::L1 => {
            let (j, s) = argmax(w.column_iter().map(|c| c.abs().sum()));
            let mut g = DMatrix::zeros(rows, cols);
            for i in 0..rows {
                g[(i, j)] = 2.0 * s * w[(i, j)].signum() * f64::from(u8::from(w[(i, j)] != 0.0));
            }
            (s * s, g)
        }
        Norm::Linf => {
            let (i, s) = argmax(w.row_iter().map(|r| r.abs().sum()));
            let mut g = DMatrix::zeros(rows, cols);
            for j in 0..cols {
                g[(i, j)] = 2.0 * s * w[(i, j)].signum() * f64::from(u8::from(w[(i, j)] != 0.0));
            }
            (s * s, g)
        }
    }
}

// First index of the maximum.
fn argmax(values: impl Iterator<Item = f64>) -> (usize, f64) {
    values
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |b, (i, v)| if v > b.1 { (i, v) } else { b })
}
