use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_bernoulli-lab"));
    c.env_remove("BERNOULLI_LAB_OUT");
    c
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout))
    })
}

fn header(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap().lines().next().unwrap().to_owned()
}

#[test]
fn ball_prints_the_closed_form() {
    let out = bin().args(["ball", "--R", "1", "--p", "2", "--N", "2"]).output().unwrap();
    assert!(out.status.success());
    let doc = json(&out);
    assert_eq!(doc["lambda"].as_f64().unwrap(), std::f64::consts::E);
    assert_eq!(doc["config"]["command"], "ball");
    // 17 significant digits on the wire.
    assert!(String::from_utf8_lossy(&out.stdout).contains("2.7182818284590451e0"));

    let out = bin().args(["ball", "--R", "2", "--p", "2", "--N", "3"]).output().unwrap();
    assert!((json(&out)["lambda"].as_f64().unwrap() - 2.0).abs() < 1e-15);
}

#[test]
fn exit_codes() {
    let usage = bin().args(["ball", "--R", "1"]).output().unwrap();
    assert_eq!(usage.status.code(), Some(2));
    let unknown = bin().arg("frobnicate").output().unwrap();
    assert_eq!(unknown.status.code(), Some(2));
    let bad_body = bin().args(["lambda", "--body", "{\"blob\":{}}"]).output().unwrap();
    assert_eq!(bad_body.status.code(), Some(2));

    let solver = bin()
        .args(["exterior", "--body", r#"{"disk":{"R":1}}"#, "--tau", "-1", "--M", "32", "--L", "16"])
        .output()
        .unwrap();
    assert_eq!(solver.status.code(), Some(1));
    let err = json(&solver);
    assert_eq!(err["kind"], "InvalidInput");
    assert!(err["detail"].as_str().unwrap().contains("tau"));
    assert_eq!(err["context"]["config"]["M"], 32);

    let help = bin().arg("--help").output().unwrap();
    assert!(help.status.success());
}

#[test]
fn lambda_on_the_unit_disk_writes_its_log() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["lambda", "--body", r#"{"disk":{"R":1}}"#, "--p", "2", "--M", "32", "--L", "32"])
        .env("BERNOULLI_LAB_OUT", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = json(&out);
    let lambda = doc["lambda"].as_f64().unwrap();
    assert!((lambda / std::f64::consts::E - 1.0).abs() < 0.01, "lambda = {lambda}");
    let bracket: Vec<f64> = doc["bracket"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert!(bracket[0] <= lambda && lambda <= bracket[1]);
    assert!(doc["iterations"].as_u64().unwrap() <= 30);
    assert_eq!(header(&dir.path().join("lambda_log.csv")), "size,tau,feasible");
    assert_eq!(header(&dir.path().join("lambda_critical_set.csv")), "theta,h");
}

#[test]
fn exterior_and_interior_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let tau = (1.0 / (2.0 * 2f64.ln())).to_string();
    let ext = bin()
        .args(["exterior", "--body", r#"{"disk":{"R":1}}"#, "--tau", &tau, "--M", "64", "--L", "32", "--out", d])
        .output()
        .unwrap();
    assert!(ext.status.success());
    let doc = json(&ext);
    assert!((doc["result"]["max_h_omega"].as_f64().unwrap() - 2.0).abs() < 5e-3);
    assert_eq!(header(&dir.path().join("exterior_boundary.csv")), "theta,h_omega,h_k,grad");
    assert_eq!(header(&dir.path().join("exterior_ring.csv")), "theta,t,h");
    assert_eq!(header(&dir.path().join("exterior_gradients.csv")), "theta,grad_outer,grad_inner");
    let rows = std::fs::read_to_string(dir.path().join("exterior_ring.csv")).unwrap().lines().count();
    assert_eq!(rows, 1 + 64 * 33);

    let int = bin()
        .args(["interior", "--body", r#"{"disk":{"R":1}}"#, "--tau", "4", "--M", "64", "--L", "32", "--out", d])
        .output()
        .unwrap();
    assert!(int.status.success());
    let doc = json(&int);
    assert_eq!(doc["outcome"], "solved");
    assert!((doc["result"]["max_h_k"].as_f64().unwrap() - 0.6996).abs() < 5e-3);
    assert_eq!(header(&dir.path().join("interior_boundary.csv")), "theta,h_k,h_omega,grad");

    let infeasible = bin()
        .args(["interior", "--body", r#"{"disk":{"R":1}}"#, "--tau", "2", "--M", "32", "--L", "16"])
        .output()
        .unwrap();
    assert!(infeasible.status.success());
    assert_eq!(json(&infeasible)["outcome"], "infeasible");
}

#[test]
fn combine_certifies_a_disk_ellipse_pair() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args([
            "combine",
            "--ring",
            r#"{"outer":{"disk":{"R":1}},"inner":{"disk":{"R":0.5}}}"#,
            "--ring",
            r#"{"outer":{"ellipse":{"a":2,"b":1}},"inner":{"disk":{"R":0.3}}}"#,
            "--weights",
            "0.3,0.7",
            "--M",
            "32",
            "--L",
            "16",
            "--out",
            dir.path().to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let doc = json(&out);
    assert_eq!(doc["result"]["certificate"]["pass"], true);
    assert_eq!(header(&dir.path().join("combined_ring.csv")), "theta,t,h");
    assert_eq!(header(&dir.path().join("combined_sign.csv")), "theta,t,sign,value");

    let mismatch = bin()
        .args(["combine", "--ring", r#"{"outer":{"disk":{"R":1}},"inner":{"disk":{"R":0.5}}}"#, "--weights", "0.5,0.5"])
        .output()
        .unwrap();
    assert_eq!(mismatch.status.code(), Some(2));
}

#[test]
fn verify_runs_a_config_file_and_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("pairs.json");
    std::fs::write(
        &cfg,
        r#"{"M": 32, "L": 16, "pairs": [{"omega0": {"disk": {"R": 1}}, "omega1": {"disk": {"R": 2}}}], "lambdas": [0.5]}"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = bin()
        .args(["verify", "--suite", "bm", "--config"])
        .arg(&cfg)
        .args(["--jobs", "2", "--out"])
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let doc = json(&out);
    assert_eq!(doc["pass"], true);
    assert_eq!(doc["checks"], 1);
    assert_eq!(doc["reports"][0]["name"], "bm");
    assert_eq!(header(&out_dir.join("000_bm.csv")), "margin,value,tolerance,rule,pass");
    let saved: Value = serde_json::from_str(&std::fs::read_to_string(out_dir.join("reports.json")).unwrap()).unwrap();
    assert_eq!(saved.as_array().unwrap().len(), 1);

    let bad = bin().args(["verify", "--suite", "nonsense"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    let unknown_field = bin().args(["verify", "--suite", "bm", "--config", r#"{"grid": 3}"#]).output().unwrap();
    assert_eq!(unknown_field.status.code(), Some(2));
}

#[test]
fn failing_checks_exit_with_three() {
    // τ = 1 lies below Λ(disk(1)) = e, so the maximal sets do not exist and
    // the check is reported as failed rather than aborting the run.
    let cfg = r#"{"M": 32, "L": 16, "interior_cases": [{"body0": {"disk": {"R": 1}}, "body1": {"disk": {"R": 1}}, "tau0": 1.0, "tau1": 1.0, "lambda": 0.5}]}"#;
    let out = bin().args(["verify", "--suite", "interior-inclusion", "--config", cfg]).output().unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stdout));
    let doc = json(&out);
    assert_eq!(doc["pass"], false);
    assert_eq!(doc["failed"][0]["name"], "interior_inclusion");
}
