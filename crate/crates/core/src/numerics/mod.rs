//! Dense complex linear algebra used by every other module.
//!
//! Matrices here are small (at most 64x64), so the routines favour robustness
//! over speed: a cyclic Jacobi eigensolver for Hermitian matrices, power
//! iteration for spectral norms and a shifted Cholesky test for PSD feasibility.

mod matrix;

pub use matrix::ComplexMatrix;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Absolute max-entry tolerance for treating a matrix as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-9;

/// Default relative off-diagonal tolerance for [`herm_eig`].
pub const EIG_TOL: f64 = 1e-12;

const MAX_SWEEPS: usize = 100;
const POWER_SEED: u64 = 0x5eed_1157;

/// Spectral decomposition `A = V diag(λ) V†` with ascending eigenvalues.
#[derive(Debug, Clone)]
pub struct HermEigResult {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl HermEigResult {
    pub fn min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max(&self) -> f64 {
        *self.eigenvalues.last().expect("non-empty spectrum")
    }

    pub fn vector(&self, k: usize) -> Vec<Complex64> {
        self.eigenvectors.column(k)
    }

    /// `V diag(f(λ)) V†`
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let mapped: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        self.reconstruct_from(&mapped)
    }

    /// `V diag(values) V†` for replacement eigenvalues in ascending-slot order.
    pub fn reconstruct_from(&self, mapped: &[f64]) -> ComplexMatrix {
        let n = self.eigenvalues.len();
        assert_eq!(mapped.len(), n);
        let v = &self.eigenvectors;
        ComplexMatrix::from_fn(n, n, |i, j| {
            (0..n)
                .map(|k| v[(i, k)] * v[(j, k)].conj() * mapped[k])
                .sum()
        })
    }
}

fn check_hermitian(a: &ComplexMatrix) -> Result<()> {
    if !a.is_square() {
        return Err(Error::InvalidOperator(format!(
            "expected square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let defect = a.hermitian_defect();
    if defect > HERMITIAN_TOL {
        return Err(Error::InvalidOperator(format!(
            "not Hermitian (defect {defect:.3e})"
        )));
    }
    Ok(())
}

/// Eigen-decomposition of a Hermitian matrix by cyclic complex Jacobi rotations.
///
/// `tol` is the relative off-diagonal Frobenius threshold; sweeps stop once
/// `off(A) <= tol * ||A||_F`.
pub fn herm_eig(a: &ComplexMatrix, tol: f64) -> Result<HermEigResult> {
    check_hermitian(a)?;
    let n = a.rows();
    let mut m = a.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    let scale = m.frobenius_norm();
    let target = tol * scale;

    let mut converged = n <= 1 || scale == 0.0;
    let mut sweep = 0;
    while !converged {
        if sweep == MAX_SWEEPS {
            return Err(Error::Numerical(format!(
                "Jacobi eigensolver did not converge in {MAX_SWEEPS} sweeps"
            )));
        }
        sweep += 1;
        for p in 0..n - 1 {
            for q in p + 1..n {
                rotate(&mut m, &mut v, p, q);
            }
        }
        converged = off_diagonal(&m) <= target;
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
    order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]));
    let eigenvalues = order.iter().map(|&i| diag[i]).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |i, k| v[(i, order[k])]);
    Ok(HermEigResult {
        eigenvalues,
        eigenvectors,
    })
}

fn off_diagonal(m: &ComplexMatrix) -> f64 {
    let n = m.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += m[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

// One two-sided rotation zeroing m[p][q]. The unitary on the (p, q) plane is
// diag(1, e^{-i phi}) times a real Jacobi rotation, where phi = arg m[p][q].
fn rotate(m: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = m[(p, q)];
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    let app = m[(p, p)].re;
    let aqq = m[(q, q)].re;
    if r < 1e-300 || r <= f64::EPSILON * 1e-3 * (app.abs() + aqq.abs()) {
        m[(p, q)] = Complex64::new(0.0, 0.0);
        m[(q, p)] = Complex64::new(0.0, 0.0);
        return;
    }
    let phase = apq / r;
    let theta = (aqq - app) / (2.0 * r);
    let t = if theta == 0.0 {
        1.0
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let e = phase.conj();
    let vpp = Complex64::new(c, 0.0);
    let vpq = Complex64::new(s, 0.0);
    let vqp = e * (-s);
    let vqq = e * c;

    let n = m.rows();
    for k in 0..n {
        let akp = m[(k, p)];
        let akq = m[(k, q)];
        m[(k, p)] = akp * vpp + akq * vqp;
        m[(k, q)] = akp * vpq + akq * vqq;
    }
    for k in 0..n {
        let apk = m[(p, k)];
        let aqk = m[(q, k)];
        m[(p, k)] = vpp.conj() * apk + vqp.conj() * aqk;
        m[(q, k)] = vpq.conj() * apk + vqq.conj() * aqk;
    }
    m[(p, q)] = Complex64::new(0.0, 0.0);
    m[(q, p)] = Complex64::new(0.0, 0.0);
    m[(p, p)] = Complex64::new(m[(p, p)].re, 0.0);
    m[(q, q)] = Complex64::new(m[(q, q)].re, 0.0);
    for k in 0..n {
        let wkp = v[(k, p)];
        let wkq = v[(k, q)];
        v[(k, p)] = wkp * vpp + wkq * vqp;
        v[(k, q)] = wkp * vpq + wkq * vqq;
    }
}

/// Largest singular value by power iteration on `a† a` from a fixed-seed start.
///
/// Stops when successive estimates agree to within `tol` relative, or after `iters` steps.
pub fn spectral_norm(a: &ComplexMatrix, iters: usize, tol: f64) -> f64 {
    if a.rows() == 0 || a.cols() == 0 || a.max_abs() == 0.0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(POWER_SEED);
    let mut v: Vec<Complex64> = (0..a.cols())
        .map(|_| {
            Complex64::new(
                StandardNormal.sample(&mut rng),
                StandardNormal.sample(&mut rng),
            )
        })
        .collect();
    normalize(&mut v);
    let adj = a.adjoint();
    let mut sigma = vec_norm(&a.mul_vec(&v));
    for _ in 0..iters {
        let w = a.mul_vec(&v);
        let mut u = adj.mul_vec(&w);
        if vec_norm(&u) == 0.0 {
            break;
        }
        normalize(&mut u);
        v = u;
        let next = vec_norm(&a.mul_vec(&v));
        let done = (next - sigma).abs() <= tol * next;
        sigma = next;
        if done {
            break;
        }
    }
    sigma
}

pub(crate) fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub(crate) fn normalize(v: &mut [Complex64]) {
    let n = vec_norm(v);
    if n > 0.0 {
        v.iter_mut().for_each(|z| *z /= n);
    }
}

/// Sum of absolute eigenvalues of a Hermitian matrix.
pub fn trace_norm(a: &ComplexMatrix) -> Result<f64> {
    let eig = herm_eig(a, EIG_TOL)?;
    Ok(eig.eigenvalues.iter().map(|l| l.abs()).sum())
}

/// Default Cholesky shift `1e-9 * max(1, ||a||_max)`.
pub fn default_shift(a: &ComplexMatrix) -> f64 {
    1e-9 * a.max_abs().max(1.0)
}

/// True iff `a + shift I` has a Cholesky factorization with strictly positive pivots.
///
/// `a` is assumed Hermitian; only its lower triangle is read. `None` selects
/// [`default_shift`].
pub fn psd_feasible(a: &ComplexMatrix, shift: Option<f64>) -> bool {
    if !a.is_square() {
        return false;
    }
    let shift = shift.unwrap_or_else(|| default_shift(a));
    let n = a.rows();
    let mut l = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)].re + shift;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if d.is_nan() || d <= 0.0 {
            return false;
        }
        let d = d.sqrt();
        l[(j, j)] = Complex64::new(d, 0.0);
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / d;
        }
    }
    true
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (br, bc) = (b.rows(), b.cols());
    ComplexMatrix::from_fn(a.rows() * br, a.cols() * bc, |i, j| {
        a[(i / br, j / bc)] * b[(i % br, j % bc)]
    })
}

/// Random Hermitian matrix with standard-normal entries (seeded).
pub fn random_hermitian(n: usize, seed: u64) -> ComplexMatrix {
    random_matrix(n, n, seed).hermitian_part()
}

/// Random complex matrix with independent standard-normal real and imaginary parts.
pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> ComplexMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(
            StandardNormal.sample(&mut rng),
            StandardNormal.sample(&mut rng),
        )
    })
}

/// Haar-like random unitary: eigenvectors of a random Hermitian matrix.
pub fn random_unitary(n: usize, seed: u64) -> ComplexMatrix {
    herm_eig(&random_hermitian(n, seed), EIG_TOL)
        .expect("random Hermitian matrices are well formed")
        .eigenvectors
}
