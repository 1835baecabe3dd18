//! End-to-end exit-code and output contract of the qbh binary.

use std::path::PathBuf;
use std::process::{Command, Output};

fn qbh(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qbh"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("qbh-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn verify_explicit_family_exits_zero_with_report() {
    let out_path = tmp("thm9i.json");
    let csv_path = tmp("thm9i.csv");
    let out = qbh(&[
        "verify",
        "--family",
        "thm9-i",
        "--param",
        "a=1",
        "--grid",
        "5x5",
        "--out",
        out_path.to_str().unwrap(),
        "--csv",
        csv_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(report["schema"], "qbh-report/1");
    assert_eq!(report["pass"], true);
    assert_eq!(report["family"], "thm9-i");
    let names: Vec<&str> =
        report["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    for expected in [
        "lift-norm",
        "lagrangian",
        "horizontal",
        "route-agreement",
        "gauss-eq",
        "codazzi",
        "h-lightlike",
        "tau2-lightlike",
        "tau2-nonzero",
        "gauss-expected",
    ] {
        assert!(names.contains(&expected), "missing check {expected}");
    }

    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let header = csv.lines().next().unwrap();
    assert!(header.starts_with("x,y,lift-norm,lagrangian,horizontal,"));
    assert_eq!(csv.lines().count(), 1 + 25);
}

#[test]
fn verify_minimal_plane_summary() {
    let out = qbh(&["verify", "--family", "plane-minimal", "--grid", "3x3"]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_slice(&out.stdout).expect("stdout is the JSON report");
    assert_eq!(report["classification"]["minimal"], 9);
    let t2zero = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == "tau2-zero")
        .unwrap();
    assert_eq!(t2zero["asserted"], true);
    assert_eq!(t2zero["pass"], true);
}

#[test]
fn verify_report_is_deterministic_apart_from_timings() {
    let strip = |out: Output| {
        let mut v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        v.as_object_mut().unwrap().remove("timings");
        serde_json::to_string(&v).unwrap()
    };
    let args = ["verify", "--family", "thm6-flat-biharmonic", "--grid", "4x4"];
    assert_eq!(strip(qbh(&args)), strip(qbh(&args)));
}

#[test]
fn exit_codes() {
    // unknown family: engine error
    assert_eq!(qbh(&["verify", "--family", "thm42"]).status.code(), Some(3));
    // family precondition violated: engine error
    assert_eq!(
        qbh(&["verify", "--family", "thm9-iv", "--param", "delta0=0"]).status.code(),
        Some(3)
    );
    // malformed grid / window / backend / param: usage errors
    assert_eq!(qbh(&["verify", "--family", "thm9-i", "--grid", "5"]).status.code(), Some(2));
    assert_eq!(
        qbh(&["verify", "--family", "thm9-i", "--window", "1,2"]).status.code(),
        Some(2)
    );
    assert_eq!(
        qbh(&["verify", "--family", "thm9-i", "--backend", "symbolic"]).status.code(),
        Some(2)
    );
    assert_eq!(
        qbh(&["verify", "--family", "thm9-i", "--param", "a"]).status.code(),
        Some(2)
    );
    // clap-level usage errors
    assert_eq!(qbh(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(qbh(&["verify"]).status.code(), Some(2));
    // curve subcommand needs exactly one source
    assert_eq!(qbh(&["curve"]).status.code(), Some(2));
}

#[test]
fn fd_backend_verify_passes() {
    let out = qbh(&[
        "verify",
        "--family",
        "thm9-i",
        "--grid",
        "3x3",
        "--backend",
        "fd",
        "--fd-step",
        "0.02",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["backend"], "fd");
    assert_eq!(report["tol"], 1e-4);
}

#[test]
fn window_override_respected() {
    let out = qbh(&[
        "verify",
        "--family",
        "thm9-i",
        "--grid",
        "3x3",
        "--window",
        "0.5:0.9,0.5:0.9",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["grid"]["window"]["x0"], 0.5);
    assert_eq!(report["grid"]["window"]["y1"], 0.9);
}

#[test]
fn curve_flat_null_pairing() {
    let out = qbh(&["curve", "--flat-null", "mu=1", "--samples", "50"]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["samples"].as_array().unwrap().len(), 50);
    for s in report["samples"].as_array().unwrap() {
        assert!((s["pairing"].as_f64().unwrap() - 1.0).abs() <= 1e-13);
    }
}

#[test]
fn curve_remark12_invariants_and_csv() {
    let csv_path = tmp("curve.csv");
    let out = qbh(&[
        "curve",
        "--remark12",
        "f=1",
        "delta=0",
        "--range",
        "0:0.5",
        "--step",
        "1e-3",
        "--samples",
        "5",
        "--csv",
        csv_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report["drift"]["max_cone"].as_f64().unwrap() <= 1e-8);
    for s in report["samples"].as_array().unwrap() {
        assert!((s["kappa_sq"].as_f64().unwrap() - 6.0).abs() <= 1e-6);
    }
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    assert!(csv.starts_with("t,"));
}

#[test]
fn convergence_subcommand() {
    let out = qbh(&["convergence", "--family", "thm9-i", "--step", "0.02"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["pass"], true);
    assert!(report["min_mean_order"].as_f64().unwrap() >= 2.0);
}
