use hqlip::classical::Norm;
use hqlip::hybrid::{hybrid_forward, hybrid_lip_bound, hybrid_lip_lower_in, BoundOptions, HybridModel};
use hqlip::qlip::{lipschitz_exact, lipschitz_subgradient};
use hqlip::quantum::CircuitSpec;
use hqlip::train::{evaluate, iris_model, train, Dataset, TrainConfig, TrainMethod};

const BELL: &str = r#"{
    "qubits": 2,
    "gates": [
        {"name": "h", "target": 0},
        {"name": "cnot", "control": 0, "target": 1},
        {"name": "ry", "target": 1, "param": {"kind": "fixed", "value": 0.4}}
    ],
    "povm": {"groups": [[0, 3], [1, 2]]}
}"#;

#[test]
fn circuit_file_bounds_agree() {
    let c: CircuitSpec = serde_json::from_str(BELL).unwrap();
    let exact = lipschitz_exact(&c).unwrap().k_star;
    let sub = lipschitz_subgradient(&c, 200, 1).unwrap().k_star;
    assert!((0.0..=1.0 + 1e-9).contains(&exact));
    assert!(sub <= exact + 1e-6 && sub >= exact - 1e-3, "{sub} vs {exact}");
}

#[test]
fn trained_model_survives_a_json_round_trip() {
    let data = Dataset::iris(2).scaled();
    let mut m = iris_model(1, 2).unwrap();
    let cfg = TrainConfig {
        method: TrainMethod::Lipreg,
        epochs: 3,
        lambda: 0.01,
        seed: 2,
        ..TrainConfig::default()
    };
    let log = train(&mut m, &data, &cfg).unwrap();
    let text = serde_json::to_string(&m).unwrap();
    let back: HybridModel = serde_json::from_str(&text).unwrap();
    let x = &data.features[17];
    assert_eq!(hybrid_forward(&m, x).unwrap(), hybrid_forward(&back, x).unwrap());
    let bound = hybrid_lip_bound(&back, &BoundOptions::default()).unwrap();
    assert_eq!(bound.total, log.last().unwrap().lip_hybrid);
    let (_, acc) = evaluate(&back, &data).unwrap();
    assert!((0.0..=1.0).contains(&acc));
}

#[test]
fn bounds_dominate_sampling_in_every_norm() {
    let m = iris_model(2, 9).unwrap();
    for norm in Norm::ALL {
        let opts = BoundOptions { norm, ..BoundOptions::default() };
        let total = hybrid_lip_bound(&m, &opts).unwrap().total;
        let lower = hybrid_lip_lower_in(&m, 2000, 4, norm).unwrap();
        assert!(lower <= total, "{norm:?}: {lower} > {total}");
        assert!(lower > 0.0);
    }
}
