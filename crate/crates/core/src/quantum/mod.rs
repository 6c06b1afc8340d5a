//! Density-matrix simulation of variational circuits.
//!
//! States are full `2^n x 2^n` density operators; a circuit is an ordered gate
//! list followed by a POVM. Both the Schrödinger picture (`U ρ U†`, then
//! `tr(M_i ρ' M_i†)`) and the Heisenberg picture (`A_i = U† M_i† M_i U`,
//! `p_i = tr(A_i ρ)`) are exposed; the Lipschitz computations use the latter.

mod circuit;
mod povm;

pub use circuit::{
    embed_gate, single_qubit_matrix, CircuitSpec, GateKind, GateSpec, Param, MAX_QUBITS,
};
pub use povm::{contiguous_groups, NamedPovm, Povm, PovmSpec, POVM_TOL};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::numerics::{herm_eig, normalize, trace_norm, ComplexMatrix, EIG_TOL};

/// Tolerance on the density-operator invariants.
pub const STATE_TOL: f64 = 1e-9;

/// Round-off below this magnitude is clamped out of probabilities.
pub const PROB_CLAMP: f64 = 1e-10;

/// Positive semidefinite, unit-trace operator on `2^n` dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    mat: ComplexMatrix,
}

impl DensityOperator {
    /// Validates Hermiticity, unit trace and positivity within [`STATE_TOL`].
    pub fn new(mat: ComplexMatrix) -> Result<Self> {
        if !mat.is_square() || !mat.rows().is_power_of_two() {
            return Err(Error::InvalidState(format!(
                "expected a 2^n square matrix, got {}x{}",
                mat.rows(),
                mat.cols()
            )));
        }
        if !mat.is_hermitian(STATE_TOL) {
            return Err(Error::InvalidState("not Hermitian".into()));
        }
        let tr = mat.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} != 1")));
        }
        let min = herm_eig(&mat, EIG_TOL)?.min();
        if min < -STATE_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(Self { mat })
    }

    pub(crate) fn from_trusted(mat: ComplexMatrix) -> Self {
        Self { mat }
    }

    /// `|ψ⟩⟨ψ|` for the normalization of `psi`.
    pub fn pure(psi: &[Complex64]) -> Self {
        let mut psi = psi.to_vec();
        normalize(&mut psi);
        Self {
            mat: ComplexMatrix::outer(&psi, &psi),
        }
    }

    /// Computational basis projector `|k⟩⟨k|`.
    pub fn basis(dim: usize, k: usize) -> Self {
        let mut m = ComplexMatrix::zeros(dim, dim);
        m[(k, k)] = Complex64::new(1.0, 0.0);
        Self { mat: m }
    }

    /// `I / dim`.
    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            mat: ComplexMatrix::identity(dim).scale(1.0 / dim as f64),
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    pub fn purity(&self) -> f64 {
        self.mat.trace_product(&self.mat).re
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(herm_eig(&self.mat, EIG_TOL)?.eigenvalues)
    }
}

fn check_dim(c: &CircuitSpec, rho: &DensityOperator) -> Result<()> {
    if rho.dim() != c.dim() {
        return Err(Error::dims(c.dim(), rho.dim()));
    }
    Ok(())
}

/// `U ρ U†` for the circuit's ordered gate product.
pub fn apply_circuit(c: &CircuitSpec, rho: &DensityOperator) -> Result<DensityOperator> {
    check_dim(c, rho)?;
    let u = c.unitary()?;
    Ok(DensityOperator::from_trusted(u.conjugate(rho.matrix()).hermitian_part()))
}

/// Outcome probabilities `p_i = tr(M_i E(ρ) M_i†)`.
pub fn measure_probs(c: &CircuitSpec, rho: &DensityOperator) -> Result<Vec<f64>> {
    let out = apply_circuit(c, rho)?;
    let raw: Vec<f64> = c
        .povm()
        .ops()
        .iter()
        .map(|m| m.conjugate(out.matrix()).trace().re)
        .collect();
    clean_probabilities(raw)
}

/// Clamps round-off negatives and renormalizes; larger violations are errors.
pub fn clean_probabilities(mut p: Vec<f64>) -> Result<Vec<f64>> {
    for x in p.iter_mut() {
        if *x < -PROB_CLAMP {
            return Err(Error::InvalidState(format!("negative probability {x:.3e}")));
        }
        if *x < 0.0 {
            *x = 0.0;
        }
    }
    let total: f64 = p.iter().sum();
    if total <= 0.0 || !total.is_finite() {
        return Err(Error::InvalidState("probabilities do not normalize".into()));
    }
    p.iter_mut().for_each(|x| *x /= total);
    Ok(p)
}

/// Heisenberg-picture effects `A_i = U† M_i† M_i U`, so that `p_i = tr(A_i ρ)`.
pub fn heisenberg_observables(c: &CircuitSpec) -> Result<Vec<ComplexMatrix>> {
    let u = c.unitary()?;
    Ok(observables_for_unitary(c.povm(), &u))
}

pub fn observables_for_unitary(povm: &Povm, u: &ComplexMatrix) -> Vec<ComplexMatrix> {
    let ud = u.adjoint();
    povm.effects()
        .iter()
        .map(|e| ud.matmul(e).matmul(u).hermitian_part())
        .collect()
}

/// `tr(A_i ρ)` per observable, cleaned like [`measure_probs`].
pub fn probabilities_from_observables(
    obs: &[ComplexMatrix],
    rho: &DensityOperator,
) -> Result<Vec<f64>> {
    clean_probabilities(obs.iter().map(|a| a.trace_product(rho.matrix()).re).collect())
}

/// `D(ρ, σ) = ½ ||ρ − σ||_1`.
pub fn trace_distance(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::dims(rho.dim(), sigma.dim()));
    }
    Ok((0.5 * trace_norm(&(rho.matrix() - sigma.matrix()))?).clamp(0.0, 1.0))
}

/// `d(p, q) = ½ Σ |p_i − q_i|`.
pub fn total_variation(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::dims(p.len(), q.len()));
    }
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// Single-qubit state `RY(θ)|0⟩ = (cos θ/2, sin θ/2)`.
fn ry_ket(theta: f64) -> [f64; 2] {
    [(theta / 2.0).cos(), (theta / 2.0).sin()]
}

/// Product state `⊗_j RY(x_j)|0⟩`, qubit 0 leftmost.
pub fn angle_encode(x: &[f64], qubits: usize) -> Result<DensityOperator> {
    if x.len() != qubits {
        return Err(Error::dims(qubits, x.len()));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidState("non-finite encoding angle".into()));
    }
    let psi: Vec<Complex64> = angle_amplitudes(x)
        .into_iter()
        .map(|a| Complex64::new(a, 0.0))
        .collect();
    Ok(DensityOperator::from_trusted(ComplexMatrix::outer(&psi, &psi)))
}

/// Real amplitudes of the angle-encoded product state.
pub fn angle_amplitudes(x: &[f64]) -> Vec<f64> {
    let mut psi = vec![1.0f64];
    for &theta in x {
        let k = ry_ket(theta);
        psi = psi.iter().flat_map(|&a| [a * k[0], a * k[1]]).collect();
    }
    psi
}

/// Random pure state from a normalized complex Gaussian vector.
pub fn random_pure_state(dim: usize, seed: u64) -> DensityOperator {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let psi: Vec<Complex64> = (0..dim)
        .map(|_| {
            Complex64::new(
                StandardNormal.sample(&mut rng),
                StandardNormal.sample(&mut rng),
            )
        })
        .collect();
    DensityOperator::pure(&psi)
}

/// Random mixed state: a Gram matrix `G G†` normalized to unit trace.
pub fn random_mixed_state(dim: usize, seed: u64) -> DensityOperator {
    let g = crate::numerics::random_matrix(dim, dim, seed);
    let m = (&g * &g.adjoint()).hermitian_part();
    let tr = m.trace().re;
    DensityOperator::from_trusted(m.scale(1.0 / tr))
}
