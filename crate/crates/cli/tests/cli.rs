use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use hqlip::classical::Norm;
use hqlip::train::{MetricsLog, MetricsRow, TrainMethod};
use hqlip::Error;
use hqlip_cli::plot::{emit_plot, PlotKind};
use hqlip_cli::{exit_code, EXIT_INVALID, EXIT_NUMERICAL};
use serde_json::Value;

fn hqlip(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hqlip")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn json_out(o: &Output) -> Value {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn qlip_identity_circuit() {
    let dir = tempfile::tempdir().unwrap();
    let c = write(dir.path(), "identity1q.json", r#"{"qubits": 1, "gates": [], "povm": "computational"}"#);
    let v = json_out(&hqlip(&["qlip", "--circuit", &c, "--method", "exact"]));
    assert!((v["k_star"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    let v = json_out(&hqlip(&["qlip", "--circuit", &c, "--method", "sampling", "--pairs", "200", "--seed", "3"]));
    assert!(v["k_star"].as_f64().unwrap() <= 1.0 + 1e-9);
}

#[test]
fn netlip_affine_product() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(
        dir.path(),
        "affine2x.json",
        r#"{"layers": [{"weights": [[2, 0], [0, 2]], "bias": [0, 0], "activation": "none"}]}"#,
    );
    let v = json_out(&hqlip(&["netlip", "--model", &m, "--method", "product", "--norm", "l2"]));
    assert_eq!(v["bound"].as_f64().unwrap(), 2.0);
    // No hidden activation: the sdp route reports the product bound.
    let v = json_out(&hqlip(&["netlip", "--model", &m]));
    assert_eq!(v["method"], "product");
    let o = hqlip(&["netlip", "--model", &m, "--method", "sdp", "--norm", "l1"]);
    assert_eq!(o.status.code(), Some(EXIT_INVALID));
}

#[test]
fn hyblip_reports_hops_and_lower() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(
        dir.path(),
        "hybrid.json",
        r#"{"blocks": [
            {"type": "dense", "weights": [[1, 0], [0, 1]], "bias": [0, 0], "activation": "none"},
            {"type": "quantum", "encoding": "angle-ry", "qubits": 2, "gates": [{"name": "cnot", "control": 0, "target": 1}], "povm": "computational"},
            {"type": "dense", "weights": [[1, -1, 0, 0], [0, 0, 1, -1]], "bias": [0, 0], "activation": "relu"}
        ]}"#,
    );
    let v = json_out(&hqlip(&["hyblip", "--model", &m, "--samples", "200", "--seed", "1"]));
    let total = v["total"].as_f64().unwrap();
    assert!(total > 0.0 && v["lower"].as_f64().unwrap() <= total);
    assert!(v["per_block"].as_array().unwrap().len() >= 3);
}

#[test]
fn usage_and_validation_errors_exit_one() {
    assert_eq!(hqlip(&["qlip", "--bogus"]).status.code(), Some(EXIT_INVALID));
    assert_eq!(hqlip(&["frobnicate"]).status.code(), Some(EXIT_INVALID));
    assert_eq!(hqlip(&["qlip", "--circuit", "/nonexistent.json"]).status.code(), Some(EXIT_INVALID));
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", r#"{"qubits": 1, "gates": [{"name": "h", "target": 3}]}"#);
    assert_eq!(hqlip(&["qlip", "--circuit", &bad]).status.code(), Some(EXIT_INVALID));
    let out = dir.path().join("m.csv");
    let o = hqlip(&["train", "--epochs", "1", "--lambda", "-1", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(EXIT_INVALID));
    for sub in ["qlip", "netlip", "hyblip", "train", "experiment", "plot"] {
        let o = hqlip(&[sub, "--help"]);
        assert!(o.status.success(), "{sub}");
        assert!(String::from_utf8_lossy(&o.stdout).contains("Usage"));
    }
}

#[test]
fn numerical_failures_map_to_two() {
    assert_eq!(exit_code(&Error::Numerical("x".into())), EXIT_NUMERICAL);
    assert_eq!(exit_code(&Error::InvalidConfig("x".into())), EXIT_INVALID);
}

#[test]
fn train_writes_metrics_and_model() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m.csv");
    let model = dir.path().join("model.json");
    let o = hqlip(&[
        "train", "--method", "pgd", "--epochs", "2", "--seed", "3", "--layers", "1",
        "--out", out.to_str().unwrap(), "--save-model", model.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let log = MetricsLog::read_csv(fs::File::open(&out).unwrap()).unwrap();
    assert_eq!(log.rows.iter().map(|r| r.epoch).collect::<Vec<_>>(), [0, 1, 2]);
    assert!(log.rows.iter().all(|r| r.method == TrainMethod::Pgd));
    // The saved model is a valid hyblip input.
    json_out(&hqlip(&["hyblip", "--model", model.to_str().unwrap()]));
}

#[test]
fn experiment_is_idempotent_with_epoch_override() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let o = hqlip(&["experiment", "figure3", "--epochs", "2", "--seed", "1", "--out", d.path().to_str().unwrap()]);
        assert!(o.status.success());
    }
    let read = |d: &tempfile::TempDir, f: &str| fs::read(d.path().join(f)).unwrap();
    assert_eq!(read(&a, "figure3.csv"), read(&b, "figure3.csv"));
    assert_eq!(read(&a, "figure3.svg"), read(&b, "figure3.svg"));
    let log = MetricsLog::read_csv(read(&a, "figure3.csv").as_slice()).unwrap();
    assert_eq!(log.len(), 9);
}

fn row(epoch: usize, method: TrainMethod, norm: Norm) -> MetricsRow {
    MetricsRow {
        epoch,
        method,
        norm,
        loss: 1.0,
        train_acc: 0.5,
        test_acc: 0.5 + 0.1 * epoch as f64,
        lip_classical: 1.0,
        lip_quantum: 1.0,
        lip_hybrid: 2.0 + epoch as f64,
        lambda: 0.01,
        seed: 0,
    }
}

fn series_labels(svg: &str) -> Vec<String> {
    let doc = roxmltree::Document::parse(svg).unwrap();
    doc.descendants()
        .filter(|n| n.attribute("class") == Some("series"))
        .map(|n| n.attribute("data-label").unwrap().to_string())
        .collect()
}

#[test]
fn single_row_plot_has_one_marker() {
    let svg = emit_plot(&MetricsLog { rows: vec![row(0, TrainMethod::Naive, Norm::L2)] }, PlotKind::Auto).unwrap();
    let doc = roxmltree::Document::parse(&svg).unwrap();
    assert_eq!(doc.root_element().tag_name().name(), "svg");
    assert_eq!(doc.descendants().filter(|n| n.attribute("class") == Some("marker")).count(), 1);
    assert!(!svg.contains("href"));
    assert!(svg.contains("epoch") && svg.contains("lip_hybrid"));
}

#[test]
fn norm_plot_labels_each_norm() {
    let rows = Norm::ALL
        .into_iter()
        .flat_map(|n| (0..4).map(move |e| row(e, TrainMethod::Lipreg, n)))
        .collect();
    let svg = emit_plot(&MetricsLog { rows }, PlotKind::Epochs).unwrap();
    assert_eq!(series_labels(&svg), ["l1", "l2", "linf"]);
}

#[test]
fn method_plot_has_two_series_per_method() {
    let rows = TrainMethod::ALL
        .into_iter()
        .flat_map(|m| (0..4).map(move |e| row(e, m, Norm::L2)))
        .collect();
    let svg = emit_plot(&MetricsLog { rows }, PlotKind::Methods).unwrap();
    let labels = series_labels(&svg);
    assert_eq!(labels.len(), 6);
    assert_eq!(labels[..3], ["naive", "pgd", "lipreg"]);
}

#[test]
fn plot_command_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("m.csv");
    let log = MetricsLog { rows: (0..3).map(|e| row(e, TrainMethod::Naive, Norm::L1)).collect() };
    log.write_csv(fs::File::create(&csv).unwrap()).unwrap();
    let svg = dir.path().join("m.svg");
    let o = hqlip(&["plot", "--metrics", csv.to_str().unwrap(), "--out", svg.to_str().unwrap()]);
    assert!(o.status.success());
    roxmltree::Document::parse(&fs::read_to_string(&svg).unwrap()).unwrap();

    let empty = dir.path().join("empty.csv");
    MetricsLog::default().write_csv(fs::File::create(&empty).unwrap()).unwrap();
    let o = hqlip(&["plot", "--metrics", empty.to_str().unwrap(), "--out", svg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(EXIT_INVALID));
    assert!(String::from_utf8_lossy(&o.stderr).contains("empty"));
}
