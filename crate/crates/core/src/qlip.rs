//! Lipschitz constant of a quantum variational circuit with respect to trace
//! distance on inputs and total variation on outcome distributions.
//!
//! `K* = sup d(C(ρ), C(σ)) / D(ρ, σ)`. Writing `Δ = (ρ − σ)/||ρ − σ||_1` this is
//! the maximum of `Σ_i |tr(A_i Δ)|` over traceless Hermitian `Δ` in the unit
//! trace-norm ball, where `A_i` are the Heisenberg-picture effects.
//!
//! Three routes are provided:
//! * [`lipschitz_exact`]: the objective is convex, so the maximum sits on an
//!   extreme point `½(uu† − vv†)`. Fixing the signs `s` of the absolute values
//!   turns each case into `½(λ_max − λ_min)` of `H_s = Σ s_i A_i`; enumerating
//!   `s` (first sign pinned to `+1`, since `s` and `−s` give the same spread)
//!   gives the exact value.
//! * [`lipschitz_subgradient`]: projected subgradient ascent on the convex
//!   program directly. Returns a feasible (lower) value.
//! * [`lipschitz_sampling`]: best ratio over random pure-state pairs.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{herm_eig, random_hermitian, ComplexMatrix, EIG_TOL};
use crate::quantum::{
    heisenberg_observables, probabilities_from_observables, random_pure_state, total_variation,
    trace_distance, CircuitSpec, DensityOperator,
};
use crate::stream_seed;

/// Largest outcome count accepted by [`lipschitz_exact`] (2^15 eigenproblems).
pub const OUTCOME_LIMIT: usize = 16;

// Iterations with an unchanged sign pattern before a restart stops early.
const STABLE_ITERS: usize = 25;

/// Settings of the subgradient oracle.
#[derive(Debug, Clone, Copy)]
pub struct SubgradientConfig {
    pub iters: usize,
    pub restarts: usize,
    pub step: f64,
}

impl Default for SubgradientConfig {
    fn default() -> Self {
        Self {
            iters: 200,
            restarts: 150,
            step: 5.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum QuantumMethod {
    Exact,
    Subgradient,
    Sampling,
}

impl QuantumMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            QuantumMethod::Exact => "exact",
            QuantumMethod::Subgradient => "subgradient",
            QuantumMethod::Sampling => "sampling",
        }
    }
}

#[derive(Debug, Clone)]
pub struct QuantumBoundReport {
    pub k_star: f64,
    pub method: QuantumMethod,
    /// State pair attaining (or approaching) `k_star`.
    pub witness: Option<(DensityOperator, DensityOperator)>,
    pub sign_pattern: Option<Vec<i8>>,
}

/// `d(C(ρ), C(σ)) / D(ρ, σ)`, zero when the states coincide.
pub fn witness_ratio(c: &CircuitSpec, rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    let obs = heisenberg_observables(c)?;
    ratio_with_observables(&obs, rho, sigma)
}

fn ratio_with_observables(
    obs: &[ComplexMatrix],
    rho: &DensityOperator,
    sigma: &DensityOperator,
) -> Result<f64> {
    let dist = trace_distance(rho, sigma)?;
    if dist == 0.0 {
        return Ok(0.0);
    }
    let p = probabilities_from_observables(obs, rho)?;
    let q = probabilities_from_observables(obs, sigma)?;
    Ok(total_variation(&p, &q)? / dist)
}

/// Exact `K*` by enumeration of sign patterns.
pub fn lipschitz_exact(c: &CircuitSpec) -> Result<QuantumBoundReport> {
    let obs = heisenberg_observables(c)?;
    exact_from_observables(&obs)
}

/// [`lipschitz_exact`] for precomputed effects `A_i`.
pub fn exact_from_observables(obs: &[ComplexMatrix]) -> Result<QuantumBoundReport> {
    let m = obs.len();
    if m > OUTCOME_LIMIT {
        return Err(Error::OutcomeLimitExceeded {
            outcomes: m,
            limit: OUTCOME_LIMIT,
        });
    }
    if m == 0 {
        return Err(Error::InvalidPovm("no outcomes".into()));
    }
    let patterns = 1usize << (m - 1);
    let spreads = (0..patterns)
        .into_par_iter()
        .map(|mask| {
            let h = signed_sum(obs, &signs_for(mask, m));
            let eig = herm_eig(&h, EIG_TOL)?;
            Ok(eig.max() - eig.min())
        })
        .collect::<Result<Vec<f64>>>()?;
    // first maximal index, independent of evaluation order
    let (best, spread) = spreads
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &s)| if s > acc.1 { (i, s) } else { acc });
    let signs = signs_for(best, m);
    let eig = herm_eig(&signed_sum(obs, &signs), EIG_TOL)?;
    let top = eig.vector(eig.eigenvalues.len() - 1);
    let bottom = eig.vector(0);
    Ok(QuantumBoundReport {
        k_star: 0.5 * spread,
        method: QuantumMethod::Exact,
        witness: Some((DensityOperator::pure(&top), DensityOperator::pure(&bottom))),
        sign_pattern: Some(signs.iter().map(|&s| s as i8).collect()),
    })
}

fn signs_for(mask: usize, m: usize) -> Vec<f64> {
    std::iter::once(1.0)
        .chain((1..m).map(|i| if mask >> (i - 1) & 1 == 1 { -1.0 } else { 1.0 }))
        .collect()
}

fn signed_sum(obs: &[ComplexMatrix], signs: &[f64]) -> ComplexMatrix {
    let n = obs[0].rows();
    let mut h = ComplexMatrix::zeros(n, n);
    for (a, &s) in obs.iter().zip(signs) {
        h = &h + &a.scale(s);
    }
    h
}

/// Spectral spread `λ_max − λ_min` of `Σ s_i A_i` for an explicit sign vector.
pub fn sign_pattern_spread(obs: &[ComplexMatrix], signs: &[f64]) -> Result<f64> {
    let eig = herm_eig(&signed_sum(obs, signs), EIG_TOL)?;
    Ok(eig.max() - eig.min())
}

/// Projected subgradient ascent of `Σ |tr(A_i Δ)|` over the traceless unit
/// trace-norm ball with the default step schedule.
pub fn lipschitz_subgradient(c: &CircuitSpec, iters: usize, seed: u64) -> Result<QuantumBoundReport> {
    let cfg = SubgradientConfig {
        iters,
        ..SubgradientConfig::default()
    };
    subgradient_from_observables(&heisenberg_observables(c)?, cfg, seed)
}

pub fn subgradient_from_observables(
    obs: &[ComplexMatrix],
    cfg: SubgradientConfig,
    seed: u64,
) -> Result<QuantumBoundReport> {
    let n = obs[0].rows();
    let runs = (0..cfg.restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let (mut delta, mut size) = project(&random_hermitian(n, stream_seed(seed, r as u64)))?;
            let mut best = (ratio(obs, &delta, size), delta.clone());
            let mut last_signs = Vec::new();
            let mut stable = 0;
            for t in 1..=cfg.iters {
                let (_, signs) = objective(obs, &delta);
                // Once the signs settle the objective is linear and the iterate sits at its maximizer.
                if signs == last_signs {
                    stable += 1;
                    if stable >= STABLE_ITERS {
                        break;
                    }
                } else {
                    stable = 0;
                }
                let g = signed_sum(obs, &signs);
                let gn = g.frobenius_norm();
                if gn == 0.0 {
                    break;
                }
                let step = cfg.step / (t as f64).sqrt() / gn;
                (delta, size) = project(&(&delta + &g.scale(step)))?;
                let value = ratio(obs, &delta, size);
                if value > best.0 {
                    best = (value, delta.clone());
                }
                last_signs = signs;
            }
            Ok(best)
        })
        .collect::<Result<Vec<(f64, ComplexMatrix)>>>()?;
    let (value, delta) = runs
        .into_iter()
        .fold(None::<(f64, ComplexMatrix)>, |acc, run| match acc {
            Some(a) if a.0 >= run.0 => Some(a),
            _ => Some(run),
        })
        .expect("at least one restart");

    // ρ, σ are the normalized positive and negative parts of Δ.
    let eig = herm_eig(&delta, EIG_TOL)?;
    let plus = eig.reconstruct_with(|l| l.max(0.0));
    let minus = eig.reconstruct_with(|l| (-l).max(0.0));
    let witness = if plus.trace().re > 0.0 && minus.trace().re > 0.0 {
        Some((
            DensityOperator::from_trusted(plus.scale(1.0 / plus.trace().re)),
            DensityOperator::from_trusted(minus.scale(1.0 / minus.trace().re)),
        ))
    } else {
        None
    };
    let (_, signs) = objective(obs, &delta);
    Ok(QuantumBoundReport {
        k_star: value,
        method: QuantumMethod::Subgradient,
        witness,
        sign_pattern: Some(signs.iter().map(|&s| s as i8).collect()),
    })
}

// Σ|tr(A_i Δ)| with the subgradient signs.
fn objective(obs: &[ComplexMatrix], delta: &ComplexMatrix) -> (f64, Vec<f64>) {
    let mut value = 0.0;
    let signs = obs
        .iter()
        .map(|a| {
            let c = a.trace_product(delta).re;
            value += c.abs();
            if c < 0.0 {
                -1.0
            } else {
                1.0
            }
        })
        .collect();
    (value, signs)
}

// Euclidean projection onto {Δ = Δ†, tr Δ = 0, ||Δ||_1 <= 1}: the set is
// unitarily invariant, so only the spectrum moves.
// Returns the projected matrix and its trace norm.
fn project(delta: &ComplexMatrix) -> Result<(ComplexMatrix, f64)> {
    let eig = herm_eig(&delta.hermitian_part(), EIG_TOL)?;
    let projected = project_spectrum(&eig.eigenvalues);
    let size = projected.iter().map(|v| v.abs()).sum();
    Ok((eig.reconstruct_from(&projected), size))
}

/// Projection of `y` onto `{x : Σ x = 0, ||x||_1 <= 1}`.
///
/// KKT gives `x = S_τ(y − μ)` (soft threshold); `μ` zeroes the sum for each
/// `τ`, and `τ` is the smallest value with `||x||_1 <= 1`.
fn project_spectrum(y: &[f64]) -> Vec<f64> {
    let shrink = |tau: f64| -> Vec<f64> {
        let sum_at = |mu: f64| -> f64 { y.iter().map(|&v| soft(v - mu, tau)).sum() };
        let (mut lo, mut hi) = (
            y.iter().copied().fold(f64::INFINITY, f64::min) - tau - 1.0,
            y.iter().copied().fold(f64::NEG_INFINITY, f64::max) + tau + 1.0,
        );
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if sum_at(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-16 * (1.0 + hi.abs()) {
                break;
            }
        }
        let mu = 0.5 * (lo + hi);
        let mut x: Vec<f64> = y.iter().map(|&v| soft(v - mu, tau)).collect();
        // balance residual round-off so the trace is exactly zero up to ulp
        let pos: f64 = x.iter().filter(|v| **v > 0.0).sum();
        let neg: f64 = -x.iter().filter(|v| **v < 0.0).sum::<f64>();
        if pos > 0.0 && neg > 0.0 {
            let target = 0.5 * (pos + neg);
            x.iter_mut().for_each(|v| {
                if *v > 0.0 {
                    *v *= target / pos
                } else {
                    *v *= target / neg
                }
            });
        }
        x
    };
    let l1 = |x: &[f64]| x.iter().map(|v| v.abs()).sum::<f64>();
    let inside = shrink(0.0);
    if l1(&inside) <= 1.0 {
        return inside;
    }
    let (mut lo, mut hi) = (0.0, y.iter().map(|v| v.abs()).fold(0.0, f64::max) * 2.0 + 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if l1(&shrink(mid)) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 {
            break;
        }
    }
    let x = shrink(hi);
    let n = l1(&x);
    if n > 0.0 {
        x.iter().map(|v| v / n.max(1.0)).collect()
    } else {
        x
    }
}

// Σ|tr(A_i Δ)| / ||Δ||_1, the d/D ratio of the state pair behind Δ.
fn ratio(obs: &[ComplexMatrix], delta: &ComplexMatrix, size: f64) -> f64 {
    if size > 0.0 {
        objective(obs, delta).0 / size
    } else {
        0.0
    }
}

fn soft(v: f64, tau: f64) -> f64 {
    v.signum() * (v.abs() - tau).max(0.0)
}

/// Best `d/D` ratio over `pairs` random pure-state pairs; a lower bound on `K*`.
pub fn lipschitz_sampling(c: &CircuitSpec, pairs: usize, seed: u64) -> Result<QuantumBoundReport> {
    let obs = heisenberg_observables(c)?;
    sampling_from_observables(&obs, pairs, seed)
}

pub fn sampling_from_observables(
    obs: &[ComplexMatrix],
    pairs: usize,
    seed: u64,
) -> Result<QuantumBoundReport> {
    let dim = obs[0].rows();
    let ratios = (0..pairs.max(1) as u64)
        .into_par_iter()
        .map(|i| {
            let rho = random_pure_state(dim, stream_seed(seed, 2 * i));
            let sigma = random_pure_state(dim, stream_seed(seed, 2 * i + 1));
            ratio_with_observables(obs, &rho, &sigma)
        })
        .collect::<Result<Vec<f64>>>()?;
    let (best, k) = ratios
        .iter()
        .enumerate()
        .fold((0, 0.0f64), |acc, (i, &r)| if r > acc.1 { (i, r) } else { acc });
    let best = best as u64;
    Ok(QuantumBoundReport {
        k_star: k,
        method: QuantumMethod::Sampling,
        witness: Some((
            random_pure_state(dim, stream_seed(seed, 2 * best)),
            random_pure_state(dim, stream_seed(seed, 2 * best + 1)),
        )),
        sign_pattern: None,
    })
}
