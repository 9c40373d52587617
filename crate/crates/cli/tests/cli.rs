use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn msd(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_msd"))
        .args(args)
        .current_dir(dir)
        .env_remove("MSD_OUTPUT_DIR")
        .output()
        .expect("msd runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = msd(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn err_line(out: &Output) -> String {
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr).into_owned();
    assert_eq!(stderr.trim_end().lines().count(), 1, "one error line, got {stderr:?}");
    assert!(stderr.starts_with("error: "), "{stderr}");
    stderr
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn simulate_writes_rate_times_periods_rows() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["simulate", "--system", "lorenz", "--rate", "4096", "--periods", "5", "-o", "l.csv"]);
    let text = fs::read_to_string(dir.path().join("l.csv")).unwrap();
    assert_eq!(text.lines().count() - 1, 20480);
    let meta = json(&dir.path().join("l.csv.meta.json"));
    assert_eq!(meta["columns"], serde_json::json!(["t", "x", "y", "z"]));
    assert_eq!(meta["provenance"]["config"]["system"], "lorenz");
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.csv", "b.csv"] {
        ok(dir.path(), &["simulate", "--system", "duffing", "--rate", "512", "-o", name]);
    }
    for name in ["a.json", "b.json"] {
        ok(dir.path(), &["sindy", "--system", "duffing", "--bursts", "30", "--span", "2T", "--seed", "11", "-o", name]);
    }
    let read = |n: &str| fs::read(dir.path().join(n)).unwrap();
    assert_eq!(read("a.csv"), read("b.csv"));
    let strip = |n: &str| {
        let mut v = json(&dir.path().join(n));
        v["provenance"]["config"]["output"] = Value::Null;
        v
    };
    assert_eq!(strip("a.json"), strip("b.json"));
    assert_eq!(strip("a.schedule.json"), strip("b.schedule.json"));
}

#[test]
fn unknown_system_is_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let line = err_line(&msd(dir.path(), &["simulate", "--system", "nosuch"]));
    assert!(line.contains("unknown_system") && line.contains("lorenz"), "{line}");
}

#[test]
fn sindy_on_simulated_csv_recovers_lorenz() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["simulate", "--system", "lorenz", "--periods", "1", "-o", "l.csv"]);
    let report =
        ok(dir.path(), &["sindy", "--system", "lorenz", "--input", "l.csv", "--threshold", "0.1", "-o", "m.json"]);
    assert!(report.contains("support matches lorenz: true"), "{report}");
    assert_eq!(
        fs::read_to_string(dir.path().join("m.report.txt")).unwrap(),
        report.lines().take(5).map(|l| format!("{l}\n")).collect::<String>()
    );
    let model = json(&dir.path().join("m.json"));
    assert_eq!(model["result"]["support_match"], true);
}

#[test]
fn huge_threshold_gives_empty_model() {
    let dir = tempfile::tempdir().unwrap();
    let report = ok(dir.path(), &["sindy", "--system", "lorenz", "--threshold", "1000", "-o", "m.json"]);
    assert!(report.contains("0 nonzero terms"), "{report}");
    assert_eq!(json(&dir.path().join("m.json"))["result"]["support_match"], false);
}

#[test]
fn bursts_need_a_seed_and_write_their_schedule() {
    let dir = tempfile::tempdir().unwrap();
    let line = err_line(&msd(dir.path(), &["sindy", "--system", "lorenz", "--bursts", "20", "--span", "1T"]));
    assert!(line.contains("missing_seed"), "{line}");
    ok(dir.path(), &["sindy", "--system", "lorenz", "--bursts", "20", "--span", "1T", "--seed", "3", "-o", "m.json"]);
    let schedule = json(&dir.path().join("m.schedule.json"));
    assert_eq!(schedule["schedule"]["start_indices"].as_array().unwrap().len(), 20);
}

#[test]
fn havok_spaced_echoes_its_config() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        dir.path(),
        &["havok", "--system", "vanderpol", "--q", "32", "--d", "4", "--c", "3", "--rank", "16", "-o", "h.json"],
    );
    let doc = json(&dir.path().join("h.json"));
    assert_eq!(doc["provenance"]["config"]["d"], 4);
    assert_eq!(doc["result"]["hankel"]["c"], 3);
    assert!(doc["result"]["test_rmse"].as_f64().unwrap().is_finite());
    assert!(dir.path().join("h.prediction.csv").exists());
}

#[test]
fn iterative_fit_writes_model_and_prediction() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["havok", "--iterative", "--F", "20", "--rank", "50", "-o", "it.json"]);
    let doc = json(&dir.path().join("it.json"));
    assert!(doc["result"]["test_rmse"].as_f64().unwrap() < 0.12);
    assert!(dir.path().join("it.prediction.csv").exists());
}

#[test]
fn sweep_rejects_unknown_experiment_and_missing_seed() {
    let dir = tempfile::tempdir().unwrap();
    let line = err_line(&msd(dir.path(), &["sweep", "nosuch"]));
    assert!(line.contains("gallery") && line.contains("usage"), "{line}");
    let line = err_line(&msd(dir.path(), &["sweep", "data-requirement", "--system", "duffing"]));
    assert!(line.contains("missing_seed"), "{line}");
}

#[test]
fn sweep_writes_json_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = msd(dir.path(), &["sweep", "gallery", "-o", "out"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("sweep gallery"));
    let doc = json(&dir.path().join("out/gallery.json"));
    assert_eq!(doc["result"]["experiment"], "gallery");
    assert!(dir.path().join("out/gallery.csv.meta.json").exists());
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("run.json"),
        r#"{"command": "simulate", "system": "lorenz", "rate": 256, "periods": "2T"}"#,
    )
    .unwrap();
    ok(dir.path(), &["--config", "run.json", "simulate", "-o", "a.csv"]);
    ok(dir.path(), &["simulate", "--config", "run.json", "--rate", "128", "-o", "b.csv"]);
    let rows = |n: &str| fs::read_to_string(dir.path().join(n)).unwrap().lines().count() - 1;
    assert_eq!(rows("a.csv"), 512);
    assert_eq!(rows("b.csv"), 256);
    let meta = json(&dir.path().join("b.csv.meta.json"));
    assert_eq!(meta["provenance"]["config"]["rate"], 128.0);
}

#[test]
fn bad_configs_and_flags_fail_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.json"), r#"{"sytem": "lorenz"}"#).unwrap();
    let line = err_line(&msd(dir.path(), &["--config", "bad.json", "simulate"]));
    assert!(line.contains("invalid_config") && line.contains("sytem"), "{line}");
    let line = err_line(&msd(dir.path(), &["simulate", "--bogus"]));
    assert!(line.starts_with("error: usage:"), "{line}");
    let line = err_line(&msd(dir.path(), &["simulate", "--system", "lorenz", "--periods", "soon"]));
    assert!(line.starts_with("error: usage:"), "{line}");
}

#[test]
fn coupled_burst_fit_recovers_support() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["sindy", "--coupled", "vdp-vdp", "--F", "4", "--burst-size", "8", "--bursts", "40", "--span", "2Tslow"];
    let report = ok(dir.path(), &[&args[..], &["--seed", "1", "-o", "c.json"]].concat());
    assert!(report.contains("support matches vdp-vdp: true"), "{report}");
    let schedule = json(&dir.path().join("c.schedule.json"));
    assert_eq!(schedule["schedule"]["burst_size"], 8);
    assert_eq!(schedule["provenance"]["config"]["span"], "2Tslow");
}

#[test]
fn seeded_sweep_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        let args =
            ["sweep", "data-requirement", "--system", "duffing", "--rates", "256", "--trials", "2", "--seed", "7"];
        ok(dir.path(), &[&args[..], &["-o", out]].concat());
    }
    let read = |p: &str| fs::read(dir.path().join(p)).unwrap();
    assert_eq!(read("a/data-requirement.csv"), read("b/data-requirement.csv"));
    assert_eq!(
        json(&dir.path().join("a/data-requirement.json"))["result"],
        json(&dir.path().join("b/data-requirement.json"))["result"]
    );
}
