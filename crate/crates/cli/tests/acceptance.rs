//! Acceptance criteria, one test per criterion. Each prints a PASS/FAIL line
//! straight to stderr so the verdict shows without `--nocapture`.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use hqlip::classical::{
    lip_empirical, lip_product, lip_sdp, ActivationKind, DenseNet, Norm, BISECTION_MAX_ITERS, SDP_BUDGET,
};
use hqlip::hybrid::{hybrid_forward, hybrid_lip_bound, hybrid_lip_lower, sample_pair, Block, BoundOptions, HybridModel, QuantumBlock};
use hqlip::qlip::{lipschitz_exact, lipschitz_sampling, lipschitz_subgradient, SubgradientConfig};
use hqlip::quantum::{
    measure_probs, random_mixed_state, random_pure_state, total_variation, trace_distance, CircuitSpec, GateKind,
    GateSpec, Povm, PovmSpec,
};
use hqlip::stream_seed;
use hqlip::train::{classical_grads, cross_entropy, quantum_grads, MetricsLog, MetricsRow, TrainMethod};

fn report(n: u32, name: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let line = format!("criterion {n} [{name}]: {verdict} ({detail})\n");
    let _ = std::io::stderr().write_all(line.as_bytes());
}

fn random_circuit(seed: u64) -> CircuitSpec {
    let qubits = 2 + (seed % 2) as usize;
    let outcomes = 2 + (seed % 7) as usize;
    let povm = Povm::random(1 << qubits, outcomes, seed);
    let spec = PovmSpec::Ops { ops: povm.ops().to_vec() };
    CircuitSpec::random(qubits, 2, spec, stream_seed(seed, 1)).unwrap()
}

#[test]
fn criterion_1_quantum_cross_validation() {
    let start = Instant::now();
    let mut failures = Vec::new();
    for seed in 0..100 {
        let c = random_circuit(seed);
        let exact = lipschitz_exact(&c).unwrap().k_star;
        let sub = lipschitz_subgradient(&c, SubgradientConfig::default().iters, seed).unwrap().k_star;
        let samp = lipschitz_sampling(&c, 10_000, seed).unwrap().k_star;
        let ok = exact >= sub - 1e-6 && exact <= sub + 1e-3 && exact >= samp - 1e-9;
        if !ok {
            failures.push(format!("seed {seed}: exact {exact} sub {sub} sampling {samp}"));
        }
    }
    let elapsed = start.elapsed();
    let pass = failures.is_empty() && elapsed < Duration::from_secs(180);
    report(1, "quantum exactness", pass, &format!("{} failures, {:.1}s", failures.len(), elapsed.as_secs_f64()));
    assert!(pass, "{failures:?} in {elapsed:?}");
}

#[test]
fn criterion_2_measurement_contracts() {
    let mut worst = f64::NEG_INFINITY;
    let mut max_k = 0.0f64;
    for seed in 0..120 {
        let c = random_circuit(seed);
        let dim = c.dim();
        let (rho, sigma) = if seed % 2 == 0 {
            (random_mixed_state(dim, stream_seed(seed, 2)), random_mixed_state(dim, stream_seed(seed, 3)))
        } else {
            (random_pure_state(dim, stream_seed(seed, 2)), random_pure_state(dim, stream_seed(seed, 3)))
        };
        let tv = total_variation(&measure_probs(&c, &rho).unwrap(), &measure_probs(&c, &sigma).unwrap()).unwrap();
        worst = worst.max(tv - trace_distance(&rho, &sigma).unwrap());
        max_k = max_k.max(lipschitz_exact(&c).unwrap().k_star);
        max_k = max_k.max(lipschitz_sampling(&c, 200, seed).unwrap().k_star);
    }
    let pass = worst <= 1e-8 && max_k <= 1.0 + 1e-9;
    report(2, "contractivity", pass, &format!("max TV - D = {worst:.2e}, max K* = {max_k:.12}"));
    assert!(pass);
}

#[test]
fn criterion_3_forced_values() {
    let identity = CircuitSpec::new(1, vec![], PovmSpec::default(), vec![]).unwrap();
    let k_id = lipschitz_exact(&identity).unwrap().k_star;
    let single = CircuitSpec::random(2, 2, PovmSpec::Groups { groups: vec![vec![0, 1, 2, 3]] }, 5).unwrap();
    let k_single = lipschitz_exact(&single).unwrap().k_star;
    let h = CircuitSpec::new(1, vec![GateSpec::fixed(GateKind::H, 0)], PovmSpec::default(), vec![]).unwrap();
    let p = measure_probs(&h, &hqlip::quantum::DensityOperator::basis(2, 0)).unwrap();
    let pass = (k_id - 1.0).abs() <= 1e-9
        && k_single.abs() <= 1e-12
        && (p[0] - 0.5).abs() <= 1e-12
        && (p[1] - 0.5).abs() <= 1e-12;
    report(3, "forced values", pass, &format!("identity {k_id}, single outcome {k_single:.1e}, H {p:?}"));
    assert!(pass);
}

#[test]
fn criterion_4_classical_sandwich() {
    let start = Instant::now();
    let mut failures = Vec::new();
    for seed in 0..20 {
        let net = DenseNet::random(&[4, 8, 3], ActivationKind::Relu, stream_seed(seed, 4)).unwrap();
        let sdp = lip_sdp(&net, SDP_BUDGET).unwrap();
        let prod = lip_product(&net, Norm::L2).bound;
        let low = lip_empirical(&net, 1000, seed, Norm::L2).unwrap().bound;
        let iters = sdp.bisection_iters.unwrap();
        let width = sdp.bisection_width.unwrap();
        let ok = low <= sdp.bound + 1e-6 && sdp.bound + 1e-6 <= prod + 2e-6 && iters <= BISECTION_MAX_ITERS && width <= 1e-6;
        if !ok {
            failures.push(format!("seed {seed}: low {low} sdp {} prod {prod} iters {iters} width {width}", sdp.bound));
        }
    }
    let elapsed = start.elapsed();
    let pass = failures.is_empty() && elapsed < Duration::from_secs(120);
    report(4, "classical sandwich", pass, &format!("{} failures, {:.1}s", failures.len(), elapsed.as_secs_f64()));
    assert!(pass, "{failures:?}");
}

#[test]
fn criterion_5_gradient_checks() {
    let h = 1e-5;
    let mut worst_classical = 0.0f64;
    for seed in 0..5 {
        let net = DenseNet::random(&[4, 8, 3], ActivationKind::Tanh, stream_seed(seed, 5)).unwrap();
        let x = [0.7, -0.3, 1.1, 0.2];
        let target = (seed % 3) as usize;
        let g = classical_grads(&net, &x, target).unwrap();
        let loss = |n: &DenseNet| cross_entropy(&n.forward(&x).unwrap(), target).0;
        for (k, gl) in g.iter().enumerate() {
            for idx in 0..gl.weights.len() {
                let mut p = net.clone();
                p.layers_mut()[k].weights[idx] += h;
                let mut m = net.clone();
                m.layers_mut()[k].weights[idx] -= h;
                let fd = (loss(&p) - loss(&m)) / (2.0 * h);
                let a = gl.weights[idx];
                worst_classical = worst_classical.max((a - fd).abs() / a.abs().max(fd.abs()).max(1e-3));
            }
        }
    }

    let base = CircuitSpec::layered_ansatz(3, 9, PovmSpec::contiguous(8, 4)).unwrap();
    let params: Vec<f64> = (0..base.params().len()).map(|i| (i as f64 * 1.3).cos() * 2.5).collect();
    let c = base.with_params(params);
    let rho = random_mixed_state(8, 21);
    let up = [0.4, -1.1, 0.9, 0.3];
    let g = quantum_grads(&c, &rho, &up).unwrap();
    let f = |p: Vec<f64>| -> f64 {
        measure_probs(&c.with_params(p), &rho).unwrap().iter().zip(&up).map(|(a, b)| a * b).sum()
    };
    let mut worst_quantum = 0.0f64;
    for j in 0..g.len() {
        let mut p = c.params().to_vec();
        p[j] += h;
        let mut m = c.params().to_vec();
        m[j] -= h;
        worst_quantum = worst_quantum.max((g[j] - (f(p) - f(m)) / (2.0 * h)).abs());
    }
    let pass = worst_classical <= 1e-4 && worst_quantum <= 1e-6 && g.len() >= 50;
    report(
        5,
        "gradient checks",
        pass,
        &format!("classical rel {worst_classical:.1e}, shift rule abs {worst_quantum:.1e} over {} angles", g.len()),
    );
    assert!(pass);
}

fn random_hybrid(seed: u64) -> HybridModel {
    let outcomes = 2 + (seed % 4) as usize;
    let pre = DenseNet::random(&[4, 3], ActivationKind::None, stream_seed(seed, 6)).unwrap();
    let circuit = CircuitSpec::random(3, 2, PovmSpec::contiguous(8, outcomes), stream_seed(seed, 7)).unwrap();
    let post = DenseNet::random(&[outcomes, 6, 2], ActivationKind::Relu, stream_seed(seed, 8)).unwrap();
    HybridModel::new(vec![Block::Dense(pre), Block::Quantum(QuantumBlock::new(circuit)), Block::Dense(post)]).unwrap()
}

#[test]
fn criterion_6_hybrid_soundness() {
    let mut worst = f64::NEG_INFINITY;
    let mut lower_ok = true;
    for seed in 0..20 {
        let m = random_hybrid(seed);
        let total = hybrid_lip_bound(&m, &BoundOptions::default()).unwrap().total;
        for s in 0..500 {
            let (a, b) = sample_pair(4, stream_seed(seed, 100 + s));
            let dy = Norm::L2.of(
                &hybrid_forward(&m, &a).unwrap().iter().zip(hybrid_forward(&m, &b).unwrap()).map(|(p, q)| p - q).collect::<Vec<_>>(),
            );
            let dx = Norm::L2.of(&a.iter().zip(&b).map(|(p, q)| p - q).collect::<Vec<_>>());
            worst = worst.max(dy - total * dx);
        }
        lower_ok &= hybrid_lip_lower(&m, 500, seed).unwrap() <= total;
    }
    let pass = worst <= 1e-8 && lower_ok;
    report(6, "hybrid soundness", pass, &format!("max excess {worst:.2e}, lower <= total: {lower_ok}"));
    assert!(pass);
}

fn run_experiment(id: &str, dir: &Path) -> (MetricsLog, Duration) {
    let start = Instant::now();
    let status = Command::new(env!("CARGO_BIN_EXE_hqlip"))
        .args(["experiment", id, "--seed", "7", "--out"])
        .arg(dir)
        .status()
        .unwrap();
    let elapsed = start.elapsed();
    assert!(status.success(), "experiment {id} exited with {status}");
    let file = std::fs::File::open(dir.join(format!("{id}.csv"))).unwrap();
    (MetricsLog::read_csv(file).unwrap(), elapsed)
}

// Last row of every run keyed by a run label.
fn finals<K: Ord>(log: &MetricsLog, key: impl Fn(&MetricsRow) -> K) -> BTreeMap<K, MetricsRow> {
    let max_epoch = log.rows.iter().map(|r| r.epoch).max().unwrap();
    log.rows.iter().filter(|r| r.epoch == max_epoch).map(|r| (key(r), r.clone())).collect()
}

#[test]
fn criterion_7_regularization_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let (log, elapsed) = run_experiment("figure2", dir.path());
    let by_lambda = finals(&log, |r| (r.lambda * 1000.0).round() as i64);
    let bounds: Vec<(f64, f64)> = by_lambda.values().map(|r| (r.lambda, r.lip_hybrid)).collect();
    let lambdas: Vec<f64> = bounds.iter().map(|b| b.0).collect();
    let strict = bounds.last().unwrap().1 < bounds[0].1;
    let trend = bounds.windows(2).all(|w| w[1].1 <= 1.05 * w[0].1);
    let pass = lambdas == [0.0, 0.01, 0.1, 1.0, 10.0] && strict && trend && elapsed < Duration::from_secs(600);
    report(7, "regularization sweep", pass, &format!("bounds {bounds:?}, {:.1}s", elapsed.as_secs_f64()));
    assert!(pass);
}

#[test]
fn criterion_8_method_comparison() {
    let dir = tempfile::tempdir().unwrap();
    let (log, elapsed) = run_experiment("figure3", dir.path());
    let by_method = finals(&log, |r| r.method.as_str());
    let get = |m: TrainMethod| by_method.get(m.as_str()).unwrap();
    let naive = get(TrainMethod::Naive).lip_hybrid;
    let bounds_ok = get(TrainMethod::Pgd).lip_hybrid <= naive && get(TrainMethod::Lipreg).lip_hybrid <= naive;
    let acc_ok = TrainMethod::ALL.iter().all(|&m| get(m).test_acc >= 0.85);
    let summary: Vec<String> = TrainMethod::ALL
        .iter()
        .map(|&m| format!("{} bound {:.3} acc {:.3}", m, get(m).lip_hybrid, get(m).test_acc))
        .collect();
    let pass = bounds_ok && acc_ok && elapsed < Duration::from_secs(600);
    report(8, "method comparison", pass, &format!("{}; {:.1}s", summary.join(", "), elapsed.as_secs_f64()));
    assert!(pass);
}

#[test]
fn criterion_9_determinism() {
    let mut identical = Vec::new();
    for id in ["figure1", "figure2", "figure3"] {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        run_experiment(id, a.path());
        run_experiment(id, b.path());
        let read = |d: &Path| std::fs::read(d.join(format!("{id}.csv"))).unwrap();
        identical.push((id, read(a.path()) == read(b.path())));
    }
    let pass = identical.iter().all(|x| x.1);
    report(9, "determinism", pass, &format!("{identical:?}"));
    assert!(pass);
}
