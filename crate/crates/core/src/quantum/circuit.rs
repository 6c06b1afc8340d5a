use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::povm::{Povm, PovmSpec};
use crate::error::{Error, Result};
use crate::numerics::{kron, ComplexMatrix};

/// Hard cap on simulated register size.
pub const MAX_QUBITS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateKind {
    Rx,
    Ry,
    Rz,
    H,
    X,
    Z,
    Cnot,
}

impl GateKind {
    pub fn is_rotation(self) -> bool {
        matches!(self, GateKind::Rx | GateKind::Ry | GateKind::Rz)
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::Rx => "rx",
            GateKind::Ry => "ry",
            GateKind::Rz => "rz",
            GateKind::H => "h",
            GateKind::X => "x",
            GateKind::Z => "z",
            GateKind::Cnot => "cnot",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Param {
    Fixed { value: f64 },
    Trainable { index: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateSpec {
    pub name: GateKind,
    pub target: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param: Option<Param>,
}

impl GateSpec {
    pub fn fixed(name: GateKind, target: usize) -> Self {
        Self {
            name,
            target,
            control: None,
            param: None,
        }
    }

    pub fn rotation(name: GateKind, target: usize, value: f64) -> Self {
        Self {
            name,
            target,
            control: None,
            param: Some(Param::Fixed { value }),
        }
    }

    pub fn trainable(name: GateKind, target: usize, index: usize) -> Self {
        Self {
            name,
            target,
            control: None,
            param: Some(Param::Trainable { index }),
        }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Self {
            name: GateKind::Cnot,
            target,
            control: Some(control),
            param: None,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct CircuitFile {
    qubits: usize,
    #[serde(default)]
    gates: Vec<GateSpec>,
    #[serde(default)]
    povm: PovmSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    params: Option<Vec<f64>>,
}

/// Gate list, measurement and bound trainable angles of a variational circuit.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "CircuitFile", into = "CircuitFile")]
pub struct CircuitSpec {
    qubits: usize,
    gates: Vec<GateSpec>,
    povm_spec: PovmSpec,
    povm: Povm,
    params: Vec<f64>,
}

impl TryFrom<CircuitFile> for CircuitSpec {
    type Error = Error;

    fn try_from(f: CircuitFile) -> Result<Self> {
        let slots = trainable_slots(&f.gates);
        let params = f.params.unwrap_or_else(|| vec![0.0; slots]);
        CircuitSpec::new(f.qubits, f.gates, f.povm, params)
    }
}

impl From<CircuitSpec> for CircuitFile {
    fn from(c: CircuitSpec) -> Self {
        CircuitFile {
            qubits: c.qubits,
            gates: c.gates,
            povm: c.povm_spec,
            params: Some(c.params),
        }
    }
}

fn trainable_slots(gates: &[GateSpec]) -> usize {
    gates
        .iter()
        .filter_map(|g| match g.param {
            Some(Param::Trainable { index }) => Some(index + 1),
            _ => None,
        })
        .max()
        .unwrap_or(0)
}

impl CircuitSpec {
    pub fn new(
        qubits: usize,
        gates: Vec<GateSpec>,
        povm_spec: PovmSpec,
        params: Vec<f64>,
    ) -> Result<Self> {
        if qubits == 0 || qubits > MAX_QUBITS {
            return Err(Error::InvalidCircuit(format!(
                "qubit count {qubits} outside 1..={MAX_QUBITS}"
            )));
        }
        for (i, g) in gates.iter().enumerate() {
            if g.target >= qubits {
                return Err(Error::InvalidCircuit(format!("gate {i}: target out of range")));
            }
            match (g.name, g.control) {
                (GateKind::Cnot, Some(c)) if c >= qubits => {
                    return Err(Error::InvalidCircuit(format!("gate {i}: control out of range")))
                }
                (GateKind::Cnot, Some(c)) if c == g.target => {
                    return Err(Error::InvalidCircuit(format!(
                        "gate {i}: control equals target"
                    )))
                }
                (GateKind::Cnot, None) => {
                    return Err(Error::InvalidCircuit(format!("gate {i}: cnot needs a control")))
                }
                (GateKind::Cnot, _) => {}
                (_, Some(_)) => {
                    return Err(Error::InvalidCircuit(format!(
                        "gate {i}: only cnot takes a control"
                    )))
                }
                _ => {}
            }
            if g.name.is_rotation() && g.param.is_none() {
                return Err(Error::InvalidCircuit(format!("gate {i}: rotation needs a param")));
            }
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidCircuit("non-finite parameter".into()));
        }
        let dim = 1usize << qubits;
        let povm = povm_spec.build(dim)?;
        if povm.dim() != dim {
            return Err(Error::InvalidPovm(format!(
                "operators act on dimension {}, register has {dim}",
                povm.dim()
            )));
        }
        Ok(Self {
            qubits,
            gates,
            povm_spec,
            povm,
            params,
        })
    }

    pub fn identity(qubits: usize, povm_spec: PovmSpec) -> Result<Self> {
        Self::new(qubits, Vec::new(), povm_spec, Vec::new())
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.qubits
    }

    pub fn gates(&self) -> &[GateSpec] {
        &self.gates
    }

    pub fn povm(&self) -> &Povm {
        &self.povm
    }

    pub fn povm_spec(&self) -> &PovmSpec {
        &self.povm_spec
    }

    pub fn outcomes(&self) -> usize {
        self.povm.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    /// Number of trainable slots referenced by the gate list.
    pub fn num_trainable(&self) -> usize {
        trainable_slots(&self.gates)
    }

    /// A copy of this circuit with `params` bound to the trainable slots.
    pub fn with_params(&self, params: Vec<f64>) -> Self {
        Self {
            params,
            ..self.clone()
        }
    }

    /// Resolved rotation angle per gate (zero for fixed gates).
    pub fn gate_angles(&self) -> Result<Vec<f64>> {
        self.gates
            .iter()
            .map(|g| match g.param {
                None => Ok(0.0),
                Some(Param::Fixed { value }) => Ok(value),
                Some(Param::Trainable { index }) => self
                    .params
                    .get(index)
                    .copied()
                    .ok_or(Error::UnboundParameter(index)),
            })
            .collect()
    }

    /// Ordered product `U = G_m ⋯ G_1` for explicit per-gate angles.
    pub fn unitary_with_angles(&self, angles: &[f64]) -> ComplexMatrix {
        assert_eq!(angles.len(), self.gates.len());
        let mut u = ComplexMatrix::identity(self.dim());
        for (g, &theta) in self.gates.iter().zip(angles) {
            u = embed_gate(self.qubits, g, theta).matmul(&u);
        }
        u
    }

    pub fn unitary(&self) -> Result<ComplexMatrix> {
        Ok(self.unitary_with_angles(&self.gate_angles()?))
    }

    /// Layered hardware-efficient ansatz: per layer RY and RZ on every qubit
    /// followed by a CNOT ring. All angles are trainable.
    pub fn layered_ansatz(qubits: usize, layers: usize, povm_spec: PovmSpec) -> Result<Self> {
        let mut gates = Vec::new();
        let mut slot = 0;
        for _ in 0..layers {
            for q in 0..qubits {
                gates.push(GateSpec::trainable(GateKind::Ry, q, slot));
                gates.push(GateSpec::trainable(GateKind::Rz, q, slot + 1));
                slot += 2;
            }
            if qubits > 1 {
                for q in 0..qubits {
                    let t = (q + 1) % qubits;
                    if qubits == 2 && q == 1 {
                        break;
                    }
                    gates.push(GateSpec::cnot(q, t));
                }
            }
        }
        Self::new(qubits, gates, povm_spec, vec![0.0; slot])
    }

    /// Random circuit with fixed angles drawn from `seed`.
    pub fn random(qubits: usize, layers: usize, povm_spec: PovmSpec, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut gates = Vec::new();
        for _ in 0..layers {
            for q in 0..qubits {
                let kind = match rng.random_range(0..4) {
                    0 => GateKind::Rx,
                    1 => GateKind::Ry,
                    2 => GateKind::Rz,
                    _ => GateKind::H,
                };
                if kind.is_rotation() {
                    gates.push(GateSpec::rotation(kind, q, rng.random_range(-PI..PI)));
                } else {
                    gates.push(GateSpec::fixed(kind, q));
                }
                gates.push(GateSpec::rotation(GateKind::Ry, q, rng.random_range(-PI..PI)));
            }
            if qubits > 1 {
                let c = rng.random_range(0..qubits);
                let t = (c + 1 + rng.random_range(0..qubits - 1)) % qubits;
                gates.push(GateSpec::cnot(c, t));
            }
        }
        Self::new(qubits, gates, povm_spec, Vec::new())
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// 2x2 matrix of a single-qubit gate.
pub fn single_qubit_matrix(kind: GateKind, theta: f64) -> ComplexMatrix {
    let (co, si) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let data = match kind {
        GateKind::Rx => vec![c(co, 0.), c(0., -si), c(0., -si), c(co, 0.)],
        GateKind::Ry => vec![c(co, 0.), c(-si, 0.), c(si, 0.), c(co, 0.)],
        GateKind::Rz => vec![c(co, -si), c(0., 0.), c(0., 0.), c(co, si)],
        GateKind::H => vec![c(h, 0.), c(h, 0.), c(h, 0.), c(-h, 0.)],
        GateKind::X => vec![c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)],
        GateKind::Z => vec![c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)],
        GateKind::Cnot => unreachable!("cnot is a two-qubit gate"),
    };
    ComplexMatrix::from_vec(2, 2, data).expect("finite gate entries")
}

// Qubit 0 is the leftmost Kronecker factor (most significant bit of the basis index).
fn kron_chain(factors: &[ComplexMatrix]) -> ComplexMatrix {
    factors[1..]
        .iter()
        .fold(factors[0].clone(), |acc, f| kron(&acc, f))
}

/// Full-register unitary of one gate.
pub fn embed_gate(qubits: usize, gate: &GateSpec, theta: f64) -> ComplexMatrix {
    let id = ComplexMatrix::identity(2);
    match gate.name {
        GateKind::Cnot => {
            let control = gate.control.expect("validated cnot");
            let p0 = ComplexMatrix::from_diag(&[1.0, 0.0]);
            let p1 = ComplexMatrix::from_diag(&[0.0, 1.0]);
            let x = single_qubit_matrix(GateKind::X, 0.0);
            let idle: Vec<ComplexMatrix> = (0..qubits)
                .map(|q| if q == control { p0.clone() } else { id.clone() })
                .collect();
            let flip: Vec<ComplexMatrix> = (0..qubits)
                .map(|q| {
                    if q == control {
                        p1.clone()
                    } else if q == gate.target {
                        x.clone()
                    } else {
                        id.clone()
                    }
                })
                .collect();
            &kron_chain(&idle) + &kron_chain(&flip)
        }
        kind => {
            let g = single_qubit_matrix(kind, theta);
            let factors: Vec<ComplexMatrix> = (0..qubits)
                .map(|q| if q == gate.target { g.clone() } else { id.clone() })
                .collect();
            kron_chain(&factors)
        }
    }
}
