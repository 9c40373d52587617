use msd::harness::{rmse, run_experiment, spacing_tradeoff_sweep, ExperimentConfig, SpacingOptions, SweepResult};

// First verified run of the F = 4 spaced model with default settings.
const SPACED_F4_GOLDEN: f64 = 3.431_244_799_988_187e-3;

fn persisted(result: &SweepResult) -> (String, Vec<u8>) {
    let mut csv = Vec::new();
    result.write_csv(&mut csv).unwrap();
    (result.to_json().unwrap(), csv)
}

fn run_twice(name: &str, cfg: &ExperimentConfig) -> SweepResult {
    let a = run_experiment(name, cfg).unwrap();
    let b = run_experiment(name, cfg).unwrap();
    assert_eq!(persisted(&a), persisted(&b), "{name} is not reproducible");
    a
}

#[test]
fn burst_sweep_reruns_are_byte_identical() {
    let cfg = ExperimentConfig { ratios: Some(vec![2.0, 4.0]), trials: Some(3), seed: 17, ..Default::default() };
    let r = run_twice("burst-vs-uniform", &cfg);
    assert_eq!(r.cells.len(), 4);
    assert!(r.cells.iter().all(|c| c.records.len() == 3));
}

#[test]
fn requirement_sweep_reruns_are_byte_identical() {
    let cfg = ExperimentConfig {
        system: Some("duffing".into()),
        rates: Some(vec![256, 1024]),
        trials: Some(4),
        seed: 7,
        ..Default::default()
    };
    let a = run_twice("data-requirement", &cfg);
    let other = run_experiment("data-requirement", &ExperimentConfig { seed: 8, ..cfg }).unwrap();
    assert_ne!(persisted(&a).0, persisted(&other).0, "seed must matter");
}

#[test]
fn deterministic_studies_rerun_identically() {
    run_twice("gallery", &ExperimentConfig::default());
    run_twice("rank-delay", &ExperimentConfig::default());
}

#[test]
fn sweep_result_json_round_trip() {
    let cfg = ExperimentConfig { ratios: Some(vec![2.0]), trials: Some(2), seed: 3, ..Default::default() };
    let r = run_experiment("burst-vs-uniform", &cfg).unwrap();
    let back = SweepResult::from_json(&r.to_json().unwrap()).unwrap();
    assert_eq!(back, r);
    assert_eq!(back.to_json().unwrap(), r.to_json().unwrap());
}

#[test]
fn unknown_experiment_is_rejected() {
    assert!(run_experiment("no-such-sweep", &ExperimentConfig::default()).is_err());
}

#[test]
fn rmse_reference_cases() {
    let truth = [2.0, -2.0, 2.0, -2.0];
    let shifted: Vec<f64> = truth.iter().map(|t| t + 1.0).collect();
    assert_eq!(rmse(&truth, &truth, false).unwrap(), 0.0);
    assert_eq!(rmse(&shifted, &truth, false).unwrap(), 1.0);
    assert_eq!(rmse(&shifted, &truth, true).unwrap(), 0.5);
}

#[test]
fn spaced_model_matches_pinned_baseline() {
    let opts = SpacingOptions { ratios: vec![4.0], ..SpacingOptions::default() };
    let sweep = spacing_tradeoff_sweep(&opts, 0).unwrap();
    let err = sweep.find(&[("model", "spaced")], &[("ratio", 4.0)]).unwrap().mean("test_rmse").unwrap();
    assert!((err / SPACED_F4_GOLDEN - 1.0).abs() < 1e-6, "{err} vs {SPACED_F4_GOLDEN}");
}
