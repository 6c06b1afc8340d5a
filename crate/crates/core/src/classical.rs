//! Dense feed-forward networks and their Lipschitz certificates.
//!
//! Three bounds are offered. [`lip_product`] multiplies induced norms.
//! [`lip_sdp`] solves the LipSDP linear matrix inequality for each two-layer
//! block. [`lip_empirical`] returns a sampled lower bound. Under `l2` they are
//! ordered `empirical <= sdp <= product`.
//!
//! The LMI for `f(x) = W1 σ(W0 x + b0) + b1`, with σ slope-restricted to
//! `[α, β]` and a diagonal multiplier `T >= 0`, certifies `γ` when
//!
//! ```text
//! [ 2αβ W0ᵀTW0 + γ²I     -(α+β) W0ᵀT  ]
//! [ -(α+β) T W0          2T - W1ᵀW1   ]  ⪰ 0.
//! ```

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use argmin::core::{CostFunction, Executor};
use argmin::solver::neldermead::NelderMead;
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{psd_feasible, spectral_norm, ComplexMatrix};
use crate::stream_seed;

/// Default evaluation budget of the multiplier search.
pub const SDP_BUDGET: usize = 200;

/// Relative bracket width at which the γ bisection stops.
pub const BISECTION_RTOL: f64 = 1e-9;

/// Hard cap on bisection steps.
pub const BISECTION_MAX_ITERS: usize = 60;

const POWER_ITERS: usize = 2000;
const POWER_TOL: f64 = 1e-15;
const GRID_POINTS: usize = 20;

/// Elementwise activation with its incremental sector `[α, β]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivationKind {
    Relu,
    Sigmoid,
    Tanh,
    None,
}

impl ActivationKind {
    pub const ALL: [ActivationKind; 4] = [Self::Relu, Self::Sigmoid, Self::Tanh, Self::None];

    /// Bounds on `(σ(x) - σ(y)) / (x - y)`.
    pub fn sector(self) -> (f64, f64) {
        match self {
            Self::Relu => (0.0, 1.0),
            Self::Sigmoid => (0.0, 0.25),
            Self::Tanh => (0.0, 1.0),
            Self::None => (1.0, 1.0),
        }
    }

    pub fn lipschitz(self) -> f64 {
        let (a, b) = self.sector();
        a.abs().max(b.abs())
    }

    pub fn apply(self, x: f64) -> f64 {
        match self {
            Self::Relu => x.max(0.0),
            Self::Sigmoid => 1.0 / (1.0 + (-x).exp()),
            Self::Tanh => x.tanh(),
            Self::None => x,
        }
    }

    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Self::Relu => f64::from(u8::from(x > 0.0)),
            Self::Sigmoid => {
                let s = self.apply(x);
                s * (1.0 - s)
            }
            Self::Tanh => 1.0 - x.tanh().powi(2),
            Self::None => 1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Relu => "relu",
            Self::Sigmoid => "sigmoid",
            Self::Tanh => "tanh",
            Self::None => "none",
        }
    }
}

/// Vector norm on a Euclidean space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    L1,
    L2,
    Linf,
}

impl Norm {
    pub const ALL: [Norm; 3] = [Norm::L1, Norm::L2, Norm::Linf];

    pub fn of(self, v: &[f64]) -> f64 {
        match self {
            Norm::L1 => v.iter().map(|x| x.abs()).sum(),
            Norm::L2 => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            Norm::Linf => v.iter().fold(0.0, |m, x| m.max(x.abs())),
        }
    }

    /// Operator norm of `w` induced by this vector norm on both sides.
    pub fn induced(self, w: &DMatrix<f64>) -> f64 {
        if w.is_empty() {
            return 0.0;
        }
        match self {
            Norm::L1 => w.column_iter().map(|c| c.abs().sum()).fold(0.0, f64::max),
            Norm::Linf => w.row_iter().map(|r| r.abs().sum()).fold(0.0, f64::max),
            Norm::L2 => spectral(w),
        }
    }

    /// Smallest `c` with `||v||_to <= c ||v||_self` for every `v` in dimension `dim`.
    pub fn conversion(self, to: Norm, dim: usize) -> f64 {
        let n = dim.max(1) as f64;
        match (self, to) {
            (a, b) if a == b => 1.0,
            (Norm::L1, _) => 1.0,
            (Norm::L2, Norm::Linf) => 1.0,
            (Norm::L2, Norm::L1) => n.sqrt(),
            (Norm::Linf, Norm::L2) => n.sqrt(),
            (Norm::Linf, Norm::L1) => n,
            (Norm::L2, Norm::L2) | (Norm::Linf, Norm::Linf) => unreachable!(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Norm::L1 => "l1",
            Norm::L2 => "l2",
            Norm::Linf => "linf",
        }
    }
}

impl std::str::FromStr for Norm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l1" => Ok(Norm::L1),
            "l2" => Ok(Norm::L2),
            "linf" => Ok(Norm::Linf),
            other => Err(Error::InvalidConfig(format!("unknown norm `{other}`"))),
        }
    }
}

/// Largest singular value of a real matrix by seeded power iteration.
pub fn spectral(w: &DMatrix<f64>) -> f64 {
    let c = ComplexMatrix::from_real(w.nrows(), w.ncols(), w.transpose().as_slice())
        .expect("finite weights");
    spectral_norm(&c, POWER_ITERS, POWER_TOL)
}

/// One affine map followed by an activation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LayerFile", into = "LayerFile")]
pub struct DenseLayer {
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
    pub activation: ActivationKind,
}

#[derive(Serialize, Deserialize)]
struct LayerFile {
    #[serde(rename = "type", default = "dense_tag")]
    kind: String,
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
    activation: ActivationKind,
}

fn dense_tag() -> String {
    "dense".into()
}

impl TryFrom<LayerFile> for DenseLayer {
    type Error = Error;

    fn try_from(f: LayerFile) -> Result<Self> {
        if f.kind != "dense" {
            return Err(Error::InvalidModel(format!("unknown layer type `{}`", f.kind)));
        }
        let rows = f.weights.len();
        let cols = f.weights.first().map_or(0, Vec::len);
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidModel("empty weight matrix".into()));
        }
        if f.weights.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidModel("ragged weight matrix".into()));
        }
        let w = DMatrix::from_row_iterator(rows, cols, f.weights.into_iter().flatten());
        DenseLayer::new(w, DVector::from_vec(f.bias), f.activation)
    }
}

impl From<DenseLayer> for LayerFile {
    fn from(l: DenseLayer) -> Self {
        LayerFile {
            kind: dense_tag(),
            weights: l.weights.row_iter().map(|r| r.iter().copied().collect()).collect(),
            bias: l.bias.iter().copied().collect(),
            activation: l.activation,
        }
    }
}

impl DenseLayer {
    pub fn new(weights: DMatrix<f64>, bias: DVector<f64>, activation: ActivationKind) -> Result<Self> {
        if bias.len() != weights.nrows() {
            return Err(Error::dims(weights.nrows(), bias.len()));
        }
        if weights.iter().chain(bias.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel("non-finite layer parameter".into()));
        }
        Ok(Self {
            weights,
            bias,
            activation,
        })
    }

    pub fn inputs(&self) -> usize {
        self.weights.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weights.nrows()
    }

    /// Pre-activation `W x + b`.
    pub fn affine(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.weights * x + &self.bias
    }

    pub fn forward(&self, x: &DVector<f64>) -> DVector<f64> {
        self.affine(x).map(|z| self.activation.apply(z))
    }
}

/// Composition of dense layers, applied first to last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NetFile", into = "NetFile")]
pub struct DenseNet {
    layers: Vec<DenseLayer>,
}

#[derive(Serialize, Deserialize)]
struct NetFile {
    layers: Vec<DenseLayer>,
}

impl TryFrom<NetFile> for DenseNet {
    type Error = Error;

    fn try_from(f: NetFile) -> Result<Self> {
        DenseNet::new(f.layers)
    }
}

impl From<DenseNet> for NetFile {
    fn from(n: DenseNet) -> Self {
        NetFile { layers: n.layers }
    }
}

/// Activations recorded by [`DenseNet::forward_trace`].
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// Network input followed by every layer output.
    pub activations: Vec<DVector<f64>>,
    /// Pre-activation of every layer.
    pub pre: Vec<DVector<f64>>,
}

impl DenseNet {
    pub fn new(layers: Vec<DenseLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidModel("network has no layers".into()));
        }
        for pair in layers.windows(2) {
            if pair[1].inputs() != pair[0].outputs() {
                return Err(Error::dims(pair[0].outputs(), pair[1].inputs()));
            }
        }
        Ok(Self { layers })
    }

    /// Gaussian weights scaled by `1/sqrt(fan_in)`, small biases, `none` on the last layer.
    pub fn random(widths: &[usize], hidden: ActivationKind, seed: u64) -> Result<Self> {
        if widths.len() < 2 || widths.contains(&0) {
            return Err(Error::InvalidModel("need at least two positive widths".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let depth = widths.len() - 1;
        let layers = (0..depth)
            .map(|k| {
                let (n_in, n_out) = (widths[k], widths[k + 1]);
                let scale = 1.0 / (n_in as f64).sqrt();
                let w = DMatrix::from_fn(n_out, n_in, |_, _| {
                    scale * gauss(&mut rng)
                });
                let b = DVector::from_fn(n_out, |_, _| 0.1 * gauss(&mut rng));
                let act = if k + 1 == depth { ActivationKind::None } else { hidden };
                DenseLayer::new(w, b, act)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(layers)
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::dims(self.input_dim(), x.len()));
        }
        let out = self
            .layers
            .iter()
            .fold(DVector::from_column_slice(x), |h, l| l.forward(&h));
        Ok(out.iter().copied().collect())
    }

    pub fn forward_trace(&self, x: &[f64]) -> Result<ForwardTrace> {
        if x.len() != self.input_dim() {
            return Err(Error::dims(self.input_dim(), x.len()));
        }
        let mut activations = vec![DVector::from_column_slice(x)];
        let mut pre = Vec::with_capacity(self.layers.len());
        for l in &self.layers {
            let z = l.affine(activations.last().expect("input present"));
            activations.push(z.map(|v| l.activation.apply(v)));
            pre.push(z);
        }
        Ok(ForwardTrace { activations, pre })
    }

    /// Jacobian of the network at `x`.
    pub fn jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let trace = self.forward_trace(x)?;
        let mut j = DMatrix::identity(self.input_dim(), self.input_dim());
        for (l, z) in self.layers.iter().zip(&trace.pre) {
            let mut step = l.weights.clone();
            for (r, zr) in z.iter().enumerate() {
                step.row_mut(r).scale_mut(l.activation.derivative(*zr));
            }
            j = step * j;
        }
        Ok(j)
    }
}

/// How a classical bound was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassicalMethod {
    Sdp,
    Product,
    EmpiricalLower,
}

impl ClassicalMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Sdp => "sdp",
            Self::Product => "product",
            Self::EmpiricalLower => "empirical_lower",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassicalBoundReport {
    pub bound: f64,
    pub norm: Norm,
    pub method: ClassicalMethod,
    /// Diagonal multipliers `T` of each certified two-layer block.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub multipliers: Option<Vec<Vec<f64>>>,
    /// Largest bisection step count over the certified blocks.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bisection_iters: Option<usize>,
    /// Largest final relative bracket width over the certified blocks.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bisection_width: Option<f64>,
}

impl ClassicalBoundReport {
    fn plain(bound: f64, norm: Norm, method: ClassicalMethod) -> Self {
        Self {
            bound,
            norm,
            method,
            multipliers: None,
            bisection_iters: None,
            bisection_width: None,
        }
    }
}

/// Product of induced weight norms and activation Lipschitz constants.
pub fn lip_product(net: &DenseNet, norm: Norm) -> ClassicalBoundReport {
    let bound = net
        .layers
        .iter()
        .map(|l| l.activation.lipschitz() * norm.induced(&l.weights))
        .product();
    ClassicalBoundReport::plain(bound, norm, ClassicalMethod::Product)
}

/// LipSDP certificate in `l2`, chained over consecutive two-layer blocks.
///
/// Layers are grouped as `(W0, σ0, W1)`, `(W2, σ2, W3)`, ... Each block gets
/// its own LMI certificate. The activations between blocks contribute their
/// Lipschitz constants, and a trailing unpaired layer contributes its
/// spectral norm.
pub fn lip_sdp(net: &DenseNet, budget: usize) -> Result<ClassicalBoundReport> {
    let n = net.layers.len();
    let hidden_sector = net.layers[..n - 1]
        .iter()
        .any(|l| l.activation != ActivationKind::None);
    if n < 2 || !hidden_sector {
        return Err(Error::UseProductBound);
    }
    let mut bound = 1.0;
    let mut multipliers = Vec::new();
    let mut iters = 0;
    let mut width = 0.0f64;
    let mut k = 0;
    while k < n {
        if k + 1 < n {
            let (l0, l1) = (&net.layers[k], &net.layers[k + 1]);
            let block = certify_block(&l0.weights, l0.activation, &l1.weights, budget)?;
            bound *= block.gamma * l1.activation.lipschitz();
            iters = iters.max(block.iterations);
            width = width.max(block.width);
            multipliers.push(block.t);
            k += 2;
        } else {
            let l = &net.layers[k];
            bound *= spectral(&l.weights) * l.activation.lipschitz();
            k += 1;
        }
    }
    Ok(ClassicalBoundReport {
        bound,
        norm: Norm::L2,
        method: ClassicalMethod::Sdp,
        multipliers: Some(multipliers),
        bisection_iters: Some(iters),
        bisection_width: Some(width),
    })
}

struct BlockCertificate {
    gamma: f64,
    t: Vec<f64>,
    iterations: usize,
    width: f64,
}

// Smallest γ for x ↦ W1 σ(W0 x): optimize T through the Schur complement,
// then bisect γ against the full LMI with T fixed.
fn certify_block(
    w0: &DMatrix<f64>,
    act: ActivationKind,
    w1: &DMatrix<f64>,
    budget: usize,
) -> Result<BlockCertificate> {
    let (alpha, beta) = act.sector();
    let s1 = spectral(w1);
    if spectral(w0) == 0.0 || s1 == 0.0 {
        return Ok(BlockCertificate {
            gamma: 0.0,
            t: vec![0.0; w0.nrows()],
            iterations: 0,
            width: 0.0,
        });
    }
    let problem = SchurObjective {
        w0,
        w1,
        alpha,
        beta,
        budget,
        evals: AtomicUsize::new(0),
        best: Mutex::new((f64::INFINITY, Vec::new())),
    };

    // Scalar multipliers first: t* = ||W1||² alone reproduces the product bound.
    let t_star = s1 * s1;
    let h = w0.nrows();
    let mut start = (problem.rho(&vec![t_star; h]), t_star);
    for i in 0..GRID_POINTS {
        let t = t_star * 10f64.powf(-2.0 + 4.0 * i as f64 / (GRID_POINTS - 1) as f64);
        let r = problem.rho(&vec![t; h]);
        if r < start.0 {
            start = (r, t);
        }
    }
    problem.record(start.0, vec![start.1; h]);

    if budget > 0 {
        let x0 = vec![start.1.ln(); h];
        let simplex: Vec<Vec<f64>> = std::iter::once(x0.clone())
            .chain((0..h).map(|i| {
                let mut x = x0.clone();
                x[i] += 0.5;
                x
            }))
            .collect();
        let solver = NelderMead::new(simplex)
            .with_sd_tolerance(1e-12)
            .map_err(|e| Error::Numerical(e.to_string()))?;
        Executor::new(&problem, solver)
            .configure(|s| s.max_iters(budget as u64))
            .run()
            .map_err(|e| Error::Numerical(e.to_string()))?;
    }
    let (rho, t) = problem.best.into_inner().expect("no poisoned lock");
    if !rho.is_finite() {
        return Err(Error::Numerical("no feasible multiplier found".into()));
    }
    bisect_gamma(w0, w1, alpha, beta, t, rho.max(0.0).sqrt())
}

// Bisection on γ with strict Cholesky feasibility of the full LMI.
fn bisect_gamma(
    w0: &DMatrix<f64>,
    w1: &DMatrix<f64>,
    alpha: f64,
    beta: f64,
    t: Vec<f64>,
    guess: f64,
) -> Result<BlockCertificate> {
    let feasible = |g: f64| psd_feasible(&lmi(w0, w1, alpha, beta, &t, g * g), Some(0.0));
    let mut hi = (2.0 * guess).max(f64::MIN_POSITIVE);
    let mut doublings = 0;
    while !feasible(hi) {
        hi *= 2.0;
        doublings += 1;
        if doublings > 60 {
            return Err(Error::Numerical("LMI infeasible for every tested γ".into()));
        }
    }
    let mut lo = 0.0;
    let mut iterations = 0;
    while hi - lo > BISECTION_RTOL * hi && iterations < BISECTION_MAX_ITERS {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
        iterations += 1;
    }
    // Feasibility must persist above the certified value.
    for factor in [1.0 + 1e-6, 2.0, 16.0] {
        if !feasible(hi * factor) {
            return Err(Error::Numerical(format!(
                "LMI feasibility not monotone in γ near {hi:.6e}"
            )));
        }
    }
    Ok(BlockCertificate {
        gamma: hi,
        t,
        iterations,
        width: (hi - lo) / hi,
    })
}

/// Negated LipSDP matrix `-M(ρ, T)`; the certificate holds when it is PSD.
pub fn lmi(
    w0: &DMatrix<f64>,
    w1: &DMatrix<f64>,
    alpha: f64,
    beta: f64,
    t: &[f64],
    rho: f64,
) -> ComplexMatrix {
    let (h, n) = (w0.nrows(), w0.ncols());
    let tm = DMatrix::from_diagonal(&DVector::from_column_slice(t));
    let top = (w0.transpose() * &tm * w0) * (2.0 * alpha * beta) + DMatrix::identity(n, n) * rho;
    let off = (&tm * w0) * -(alpha + beta);
    let bottom = &tm * 2.0 - w1.transpose() * w1;
    let mut m = DMatrix::zeros(n + h, n + h);
    m.view_mut((0, 0), (n, n)).copy_from(&top);
    m.view_mut((n, 0), (h, n)).copy_from(&off);
    m.view_mut((0, n), (n, h)).copy_from(&off.transpose());
    m.view_mut((n, n), (h, h)).copy_from(&bottom);
    ComplexMatrix::from_real(n + h, n + h, m.transpose().as_slice()).expect("finite LMI")
}

struct SchurObjective<'a> {
    w0: &'a DMatrix<f64>,
    w1: &'a DMatrix<f64>,
    alpha: f64,
    beta: f64,
    budget: usize,
    evals: AtomicUsize,
    best: Mutex<(f64, Vec<f64>)>,
}

impl SchurObjective<'_> {
    // Least ρ making the LMI feasible for this T, or +inf when 2T - W1ᵀW1 is not positive definite.
    fn rho(&self, t: &[f64]) -> f64 {
        let tm = DMatrix::from_diagonal(&DVector::from_column_slice(t));
        let s = &tm * 2.0 - self.w1.transpose() * self.w1;
        let Some(chol) = s.cholesky() else {
            return f64::INFINITY;
        };
        let tw = &tm * self.w0;
        let q = (tw.transpose() * chol.solve(&tw)) * (self.alpha + self.beta).powi(2)
            - (self.w0.transpose() * &tw) * (2.0 * self.alpha * self.beta);
        let q = (&q + q.transpose()) * 0.5;
        let top = q.symmetric_eigenvalues().max();
        if top.is_finite() {
            top.max(0.0)
        } else {
            f64::INFINITY
        }
    }

    fn record(&self, rho: f64, t: Vec<f64>) {
        let mut best = self.best.lock().expect("no poisoned lock");
        if rho < best.0 {
            *best = (rho, t);
        }
    }
}

impl CostFunction for &SchurObjective<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, log_t: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        if self.evals.fetch_add(1, Ordering::Relaxed) >= self.budget {
            return Ok(f64::INFINITY);
        }
        let t: Vec<f64> = log_t.iter().map(|v| v.clamp(-300.0, 300.0).exp()).collect();
        let rho = self.rho(&t);
        self.record(rho, t);
        Ok(rho)
    }
}

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Sampled lower bound: the largest observed `||f(x) - f(x')|| / ||x - x'||`.
///
/// Each sample draws a Gaussian point, takes the direction in which the local
/// Jacobian stretches most under `norm`, and measures a short secant along it.
/// A second, random direction is measured as well. Every reported ratio comes
/// from an actual pair of inputs.
pub fn lip_empirical(net: &DenseNet, samples: usize, seed: u64, norm: Norm) -> Result<ClassicalBoundReport> {
    let n = net.input_dim();
    let mut best = 0.0f64;
    for s in 0..samples.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, s as u64));
        let x: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let random_dir: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let j = net.jacobian(&x)?;
        for dir in [steepest_direction(&j, norm), random_dir] {
            let scale = norm.of(&dir);
            if scale == 0.0 {
                continue;
            }
            let h = 1e-6 * (1.0 + Norm::L2.of(&x));
            let x2: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + h * d / scale).collect();
            best = best.max(secant_ratio(net, &x, &x2, norm)?);
        }
    }
    Ok(ClassicalBoundReport::plain(best, norm, ClassicalMethod::EmpiricalLower))
}

/// `||f(a) - f(b)|| / ||a - b||` under one norm; 0 for coincident points.
pub fn secant_ratio(net: &DenseNet, a: &[f64], b: &[f64], norm: Norm) -> Result<f64> {
    let dx: Vec<f64> = a.iter().zip(b).map(|(p, q)| p - q).collect();
    let den = norm.of(&dx);
    if den == 0.0 {
        return Ok(0.0);
    }
    let fa = net.forward(a)?;
    let fb = net.forward(b)?;
    let dy: Vec<f64> = fa.iter().zip(&fb).map(|(p, q)| p - q).collect();
    Ok(norm.of(&dy) / den)
}

// Input direction maximizing ||J d|| / ||d|| (exactly for l1, l2; a vertex heuristic for linf).
fn steepest_direction(j: &DMatrix<f64>, norm: Norm) -> Vec<f64> {
    match norm {
        Norm::L1 => {
            let (col, _) = j
                .column_iter()
                .map(|c| c.abs().sum())
                .enumerate()
                .fold((0, -1.0), |b, (i, v)| if v > b.1 { (i, v) } else { b });
            (0..j.ncols()).map(|i| f64::from(u8::from(i == col))).collect()
        }
        Norm::Linf => {
            let (row, _) = j
                .row_iter()
                .map(|r| r.abs().sum())
                .enumerate()
                .fold((0, -1.0), |b, (i, v)| if v > b.1 { (i, v) } else { b });
            j.row(row).iter().map(|v| if *v < 0.0 { -1.0 } else { 1.0 }).collect()
        }
        Norm::L2 => {
            let svd = j.clone().svd(false, true);
            let v_t = svd.v_t.expect("requested right singular vectors");
            let k = svd.singular_values.imax();
            v_t.row(k).iter().copied().collect()
        }
    }
}
