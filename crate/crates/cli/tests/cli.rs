use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn cpr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cpr")).args(args).output().expect("spawn cpr")
}

fn ok(args: &[&str]) -> Output {
    let out = cpr(args);
    assert!(out.status.success(), "cpr {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn gen(dir: &Path, n: usize, k: usize, m: usize, kind: &str, seed: u64) {
    ok(&[
        "gen",
        "--n",
        &n.to_string(),
        "--k",
        &k.to_string(),
        "--m",
        &m.to_string(),
        "--kind",
        kind,
        "--seed",
        &seed.to_string(),
        "--out",
        dir.to_str().unwrap(),
    ]);
}

fn signal_values(dir: &Path) -> Vec<f64> {
    let v = read_json(&dir.join("signal.json"));
    v["values"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

#[test]
fn gen_flat_norms() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), 20, 5, 30, "flat", 3);
    let vals = signal_values(dir.path());
    assert_eq!(vals.len(), 5);
    let l1: f64 = vals.iter().map(|v| v.abs()).sum();
    let l2: f64 = vals.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!((l1 - 5f64.sqrt()).abs() < 1e-12);
    assert!((l2 - 1.0).abs() < 1e-12);
    let b = read_json(&dir.path().join("measurements.json"));
    assert_eq!(b.as_array().unwrap().len(), 30);
}

#[test]
fn gen_gaussian_unit_norm() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), 30, 7, 10, "gaussian-normalized", 11);
    let l2: f64 = signal_values(dir.path()).iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!((l2 - 1.0).abs() < 1e-12);
}

#[test]
fn gen_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    gen(a.path(), 16, 3, 40, "flat", 99);
    gen(b.path(), 16, 3, 40, "flat", 99);
    for f in ["signal.json", "ensemble.json", "measurements.json"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let c = tempfile::tempdir().unwrap();
    gen(c.path(), 16, 3, 40, "flat", 100);
    assert_ne!(
        fs::read(a.path().join("measurements.json")).unwrap(),
        fs::read(c.path().join("measurements.json")).unwrap()
    );
}

#[test]
fn gen_rejects_k_above_n() {
    let dir = tempfile::tempdir().unwrap();
    let out = cpr(&["gen", "--n", "4", "--k", "5", "--m", "3", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn recover_small_instance() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), 8, 1, 30, "flat", 5);
    let out = ok(&["recover", "--input", dir.path().to_str().unwrap(), "--lambda", "3", "--json"]);
    let recs: Value = serde_json::from_slice(&out.stdout).unwrap();
    let recs = recs.as_array().unwrap();
    assert_eq!(recs.len(), 1);
    assert_eq!(recs[0]["success"], Value::Bool(true));
    assert!(recs[0]["rel_error"].as_f64().unwrap() <= 1e-3);
}

#[test]
fn recover_dedups_lambda_with_warning() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), 8, 1, 30, "flat", 6);
    let out = ok(&["recover", "--input", dir.path().to_str().unwrap(), "--lambda", "3,3"]);
    let csv = String::from_utf8(out.stdout).unwrap();
    assert_eq!(csv.lines().count(), 2, "{csv}");
    assert!(csv.lines().next().unwrap().starts_with("schema_version,"));
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
}

#[test]
fn recover_rejects_m_zero() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), 8, 1, 1, "flat", 1);
    let p = dir.path();
    let mut spec = read_json(&p.join("ensemble.json"));
    spec["m"] = Value::from(0);
    fs::write(p.join("ensemble.json"), spec.to_string()).unwrap();
    fs::write(p.join("measurements.json"), "[]").unwrap();
    let out = cpr(&["recover", "--input", p.to_str().unwrap(), "--lambda", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn recover_missing_input_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = cpr(&["recover", "--input", dir.path().join("nope").to_str().unwrap()]);
    assert!(!out.status.success());
}

#[test]
fn certify_refuses_too_few_measurements() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), 64, 3, 5, "flat", 2);
    let out = cpr(&["certify", "--input", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn certify_report_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), 16, 1, 220, "flat", 8);
    let out = ok(&["certify", "--input", dir.path().to_str().unwrap(), "--c1", "0"]);
    let first: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(first["passed"].as_array().unwrap().len(), 3);
    let text = serde_json::to_string(&first).unwrap();
    let second: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(first, second);
    assert_eq!(serde_json::to_string(&second).unwrap(), text);
}

#[test]
fn verify_lemmas_rows_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("suite.json");
    fs::write(
        &cfg,
        r#"{"seed": 5, "checks": [
            {"lemma_id": "L1_TRACE_SANDWICH", "n": 12, "k": 3, "m": 100, "trials": 10},
            {"lemma_id": "LOWRANK_LOWER", "n": 12, "k": 3, "m": 100, "trials": 10},
            {"lemma_id": "L1_UPPER", "n": 12, "m": 100, "trials": 10},
            {"lemma_id": "TRUNCATED_MOMENT", "n": 10, "m": 200, "trials": 5, "epsilon": 0.15},
            {"lemma_id": "CHI2_TAIL", "big_n": 150, "m1": 50, "trials": 10000},
            {"lemma_id": "E0_EVENT", "n": 20, "k": 2, "m": 10, "trials": 50}
        ]}"#,
    )
    .unwrap();
    let run = || {
        let out = ok(&["verify-lemmas", "--config", cfg.to_str().unwrap()]);
        String::from_utf8(out.stdout).unwrap()
    };
    let strip = |s: &str| -> Vec<String> {
        s.lines().map(|l| l.rsplit_once(',').unwrap().0.to_string()).collect()
    };
    let a = run();
    let b = run();
    assert_eq!(a.lines().count(), 7);
    assert_eq!(strip(&a), strip(&b));
    let ids: Vec<&str> = a.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(
        ids,
        ["L1_TRACE_SANDWICH", "LOWRANK_LOWER", "L1_UPPER", "TRUNCATED_MOMENT", "CHI2_TAIL", "E0_EVENT"]
    );
}

#[test]
fn verify_lemmas_default_suite_to_file() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["verify-lemmas", "--seed", "2024", "--out", dir.path().to_str().unwrap()]);
    let csv = fs::read_to_string(dir.path().join("lemmas.csv")).unwrap();
    assert_eq!(csv.lines().count(), 7);
}

#[test]
fn phase_diagram_small_grid() {
    let out = ok(&[
        "phase-diagram",
        "--n",
        "10",
        "--k-grid",
        "1,8",
        "--m-grid",
        "4,20",
        "--trials",
        "2",
        "--lambda-rule",
        "fixed:2",
        "--max-iter",
        "300",
        "--json",
    ]);
    let pd: Value = serde_json::from_slice(&out.stdout).unwrap();
    let rates = pd["success_rate"].as_array().unwrap();
    assert_eq!(rates.len(), 2);
    for row in rates {
        assert_eq!(row.as_array().unwrap().len(), 2);
        for r in row.as_array().unwrap() {
            let r = r.as_f64().unwrap();
            assert!((0.0..=1.0).contains(&r));
        }
    }
}

#[test]
fn phase_diagram_rejects_zero_trials() {
    let out = cpr(&["phase-diagram", "--n", "6", "--k-grid", "1", "--m-grid", "10", "--trials", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn phase_diagram_budget_guard() {
    let out = cpr(&[
        "phase-diagram",
        "--n",
        "6",
        "--k-grid",
        "1,2",
        "--m-grid",
        "10,20",
        "--trials",
        "10",
        "--max-work",
        "1000",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

fn bound(args: &[&str]) -> Value {
    let mut full = vec!["bound"];
    full.extend_from_slice(args);
    serde_json::from_slice(&ok(&full).stdout).unwrap()
}

fn bound_min(v: &Value) -> f64 {
    v["m_lower"].as_f64().unwrap()
}

#[test]
fn bound_examples() {
    assert_eq!(bound_min(&bound(&["--k", "4", "--n", "100"])), 0.0);
    let b = bound(&["--k", "8", "--n", "1024"]);
    assert!((bound_min(&b) - 6.66e-4).abs() < 5e-6, "{b}");
    let b = bound(&["--k", "100", "--n", "1000000"]);
    assert!((bound_min(&b) - 0.0262).abs() < 5e-5, "{b}");
    assert_eq!(b["term_spectral"].as_f64().unwrap(), 576.0);
}

#[test]
fn bound_from_signal_file() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), 1024, 8, 1, "flat", 4);
    let b = bound(&["--signal", dir.path().join("signal.json").to_str().unwrap(), "--n", "1024"]);
    assert!((bound_min(&b) - 6.66e-4).abs() < 5e-6, "{b}");
}

#[test]
fn threads_zero_rejected() {
    let out = cpr(&["bound", "--k", "4", "--n", "100", "--threads", "0"]);
    assert_eq!(out.status.code(), Some(2));
}
