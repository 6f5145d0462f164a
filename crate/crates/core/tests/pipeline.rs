//! End-to-end runs of the experiment pipeline on small configurations.

use ivfen::pipeline::{run_experiment, ExperimentConfig};
use ivfen::regress::RegressorSpec;
use ivfen::series::Component;

fn tiny() -> ExperimentConfig {
    ExperimentConfig::from_json(
        r#"{
            "data": {"dgp": {"kind": "c1", "length": 400, "seed": 5}},
            "orders": {"center": 5, "range": 3},
            "segment_lengths": [30, 40],
            "depths": [1],
            "network": {"width": 4, "feature_dim": 8},
            "train": {"epochs": 2},
            "methods": ["GASF", "RP"],
            "regressors": [{"kind": "ridge", "lambda": 1.0}, {"kind": "knn", "k": 1}],
            "seed": 3
        }"#,
    )
    .unwrap()
}

#[test]
fn grid_is_complete_and_leak_free() {
    let cfg = tiny();
    let out = run_experiment(&cfg, None).unwrap();
    let r = &out.report;
    assert_eq!(r.cells.len(), 2 * (1 + 2) * 2);
    assert_eq!(r.mde.len(), 2 * (1 + 2));
    assert!(r.cells.iter().all(|c| c.error.is_none() && c.metrics.is_some()), "{:?}", r.cells);
    assert!(r.mde.iter().all(|e| e.value.is_some_and(|v| v > 0.0)));
    assert_eq!(r.split_index, 320);
    let raw_c = r.cell("ridge", "raw", Component::Center).unwrap();
    assert_eq!(raw_c.train_rows, Some(320 - 5));
    assert_eq!(raw_c.eval_rows, Some(80));
    let raw_r = r.cell("knn", "GASF", Component::Range).unwrap();
    assert_eq!(raw_r.train_rows, Some(320 - 3));
    // networks see only segments cut from the first 320 observations
    for cand in &r.fen_selection.candidates {
        assert_eq!(cand.images, 2 * 4 * (320 / cand.score.segment_len));
    }
    assert_eq!(r.fen_selection.candidates.len(), 2);
    assert_eq!(out.model.provenance.get("config_hash"), Some(&cfg.hash()));
}

#[test]
fn repeated_runs_are_identical() {
    let cfg = tiny();
    let a = run_experiment(&cfg, None).unwrap();
    let b = run_experiment(&ExperimentConfig { jobs: Some(2), ..cfg.clone() }, None).unwrap();
    assert_eq!(a.report.to_json(), b.report.to_json());
    assert_eq!(a.report.to_csv().unwrap(), b.report.to_csv().unwrap());
    assert_eq!(a.model.to_json(), b.model.to_json());
}

#[test]
fn one_nearest_neighbour_memorizes_training_rows() {
    let cfg = ExperimentConfig { eval_on_train: true, regressors: vec![RegressorSpec::knn(1)], ..tiny() };
    let r = run_experiment(&cfg, None).unwrap().report;
    for source in [Component::Center, Component::Range] {
        let m = r.cell("knn", "raw", source).unwrap().metrics.unwrap();
        assert_eq!((m.mse, m.mae), (0.0, 0.0));
        assert_eq!(m.smape, Some(0.0));
    }
    assert_eq!(r.mde.iter().find(|e| e.method == "raw").unwrap().value, Some(0.0));
    assert_eq!(r.evaluated_on, "train");
}

#[test]
fn failing_cells_are_recorded() {
    let cfg = ExperimentConfig { regressors: vec![RegressorSpec::knn(100_000), RegressorSpec::ridge(0.1)], ..tiny() };
    let r = run_experiment(&cfg, None).unwrap().report;
    assert!(r.cells.iter().filter(|c| c.regressor == "knn").all(|c| c.error.is_some() && c.metrics.is_none()));
    assert!(r.cells.iter().filter(|c| c.regressor == "ridge").all(|c| c.metrics.is_some()));
    assert!(r.mde.iter().filter(|e| e.regressor == "knn").all(|e| e.error.is_some()));
    let csv = r.to_csv().unwrap();
    assert_eq!(csv.lines().count(), 1 + r.cells.len() + r.mde.len());
}

#[test]
fn auto_orders_are_recorded() {
    let mut cfg = tiny();
    cfg.orders.center = None;
    cfg.orders.range = None;
    cfg.orders.max_lag = 10;
    let r = run_experiment(&cfg, None).unwrap().report;
    let auto = r.orders.auto_center.unwrap();
    assert_eq!(r.orders.center, auto.max(2));
    assert!(r.orders.auto_range.is_some());
}

#[test]
fn too_short_for_segments() {
    let cfg = ExperimentConfig { segment_lengths: vec![300], ..tiny() };
    assert!(run_experiment(&cfg, None).is_err());
}
