use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_defect-forge"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn solve_small(dir: &Path) -> Output {
    run(
        dir,
        &["solve-profile", "--alpha", "8", "--k", "1", "--radius", "10", "--nodes", "300"],
    )
}

#[test]
fn missing_alpha_is_a_usage_error() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &["solve-profile", "--k", "1"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("--alpha") && err.contains("usage"), "{err}");
}

#[test]
fn unknown_flag_and_bad_alpha_exit_with_one() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(run(d.path(), &["solve-profile", "--bogus"]).status.code(), Some(1));
    let o = run(d.path(), &["solve-profile", "--alpha", "7", "--k", "1"]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(d.path(), &["solve-profile", "--alpha", "8", "--k", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(run(d.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn moments_prints_isotropic_values() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &["moments", "--f", "0", "--g", "0"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["z"].as_f64().unwrap() - 4.0 * std::f64::consts::PI).abs() < 1e-10);
    assert!((v["a"].as_f64().unwrap() - 2.0 / 15.0).abs() < 1e-12);
    let o = run(d.path(), &["closure", "--u", "0.1", "--v", "-0.02"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["f"].as_f64().unwrap() > 0.0 && v["residual"].as_f64().unwrap() < 1e-10);
}

#[test]
fn solve_then_stability_is_reproducible_and_stable() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let o = solve_small(d.path());
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(String::from_utf8_lossy(&o.stdout).lines().count(), 1);
    }
    for f in ["profile.csv", "meta.json"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert_eq!(x, y, "{f} differs between identical runs");
    }
    let csv = std::fs::read_to_string(a.path().join("profile.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "r,u,v,f,g,res_u,res_v");
    assert_eq!(csv.lines().count(), 301);
    let meta = json(&a.path().join("meta.json"));
    assert_eq!(meta["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(meta["invariants_pass"], Value::Bool(true));

    let o = run(
        a.path(),
        &["stability", "--profile", "profile.csv", "--n-max", "2", "--m-max", "2"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rep = json(&a.path().join("report.json"));
    assert_eq!(rep["verdict"], "stable");
    assert_eq!(rep["k"], 1);
    assert!(rep["blocks"].as_array().unwrap().len() >= 7);
}

#[test]
fn flags_override_the_config_file() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{"alpha": 9.0, "k": 1, "domain": {"kind": "finite", "radius": 10.0}, "grid": {"nodes": 300}}"#,
    )
    .unwrap();
    let o = run(d.path(), &["--config", "run.json", "solve-profile", "--alpha", "8"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let meta = json(&d.path().join("meta.json"));
    assert_eq!(meta["alpha"], 8.0);
    assert_eq!(meta["config"]["alpha"], 8.0);
    assert_eq!(meta["nodes"], 300);

    // same effective configuration as the plain flags run
    let e = tempfile::tempdir().unwrap();
    solve_small(e.path());
    assert_eq!(meta["config_hash"], json(&e.path().join("meta.json"))["config_hash"]);

    std::fs::write(&cfg, r#"{"alpha": 8.0, "nodez": 3}"#).unwrap();
    let o = run(d.path(), &["--config", "run.json", "solve-profile"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn identity_ledger_passes_and_respects_the_seed() {
    let d = tempfile::tempdir().unwrap();
    let args = ["verify-identities", "--seed", "4", "--samples", "20", "--out", "l1.json"];
    let o = bin()
        .current_dir(d.path())
        .env("DEFECT_FORGE_THREADS", "1")
        .args(args)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(d.path(), &["verify-identities", "--seed", "4", "--samples", "20", "--out", "l2.json"]);
    assert!(o.status.success());
    let (x, y) = (d.path().join("l1.json"), d.path().join("l2.json"));
    assert_eq!(std::fs::read(&x).unwrap(), std::fs::read(&y).unwrap());
    let l = json(&x);
    assert_eq!(l["seed"], 4);
    assert_eq!(l["all_pass"], Value::Bool(true));
    assert!(l["integral"].is_null());
    assert_eq!(l["algebraic"]["entries"].as_array().unwrap().len(), 10);
}

#[test]
fn identity_ledger_on_a_profile_includes_integral_rows() {
    let d = tempfile::tempdir().unwrap();
    assert!(solve_small(d.path()).status.success());
    let o = run(
        d.path(),
        &["verify-identities", "--profile", "profile.csv", "--samples", "10", "--n-eta", "4"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let l = json(&d.path().join("ledger.json"));
    assert_eq!(l["integral"]["entries"].as_array().unwrap().len(), 9);
}

#[test]
fn tables_are_written() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &["closure-table", "--steps", "9", "--out", "t.csv"]);
    assert!(o.status.success());
    let t = std::fs::read_to_string(d.path().join("t.csv")).unwrap();
    assert_eq!(t.lines().next().unwrap(), "u,v,f,g,residual,iterations");
    assert!(t.lines().count() > 5);
    let o = run(
        d.path(),
        &["phase-scan", "--alpha-min", "5", "--alpha-max", "8", "--steps", "4", "--out", "s.csv"],
    );
    assert!(o.status.success());
    let s = std::fs::read_to_string(d.path().join("s.csv")).unwrap();
    let rows: Vec<&str> = s.lines().collect();
    assert_eq!(rows.len(), 5);
    assert!(rows[1].starts_with("5,1,0,"), "{}", rows[1]);
    assert!(rows[4].starts_with("8,3,"), "{}", rows[4]);
}
