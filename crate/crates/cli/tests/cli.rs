use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tripletflow_core::famindex::{scalar_mobius_loop, LoopLiteral};
use tripletflow_core::linalg::*;
use tripletflow_core::relspace::LinearRelation;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_tripletflow"));
    c.env_remove("TRIPLETFLOW_TOL");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn write_loop(dir: &Path, name: &str, lit: &LoopLiteral) -> String {
    let p = dir.join(name);
    fs::write(&p, serde_json::to_string(lit).unwrap()).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn rellich_default_run() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = run(&["rellich", "--out", d]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rep = json(&out);
    assert_eq!(rep["spectral_flow"], 1);
    assert_eq!(rep["winding"], 1);
    assert_eq!(rep["consistent"], true);
    let file: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("rellich_index.json")).unwrap()).unwrap();
    assert_eq!(file, rep);
    let csv = fs::read_to_string(dir.path().join("rellich_branches.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("theta,kappa,branch_id,lambda"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first.len(), 4);
    assert_eq!(first[1], "inf");
    let lambda: f64 = first[3].parse().unwrap();
    assert!((lambda - std::f64::consts::PI.powi(2)).abs() < 1e-10);
    assert!(!csv.contains('\r'));
}

#[test]
fn rellich_is_byte_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let out = run(&["rellich", "--samples", "180", "--out", d.path().to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
    }
    for f in ["rellich_index.json", "rellich_branches.csv"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn rellich_json_branches_and_small_window() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let full = run(&["rellich", "--samples", "180", "--out", d]);
    let rows_full = fs::read_to_string(dir.path().join("rellich_branches.csv")).unwrap().lines().count();
    let out = run(&["rellich", "--samples", "180", "--lambda-max", "50", "--format", "json", "--out", d]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["spectral_flow"], json(&full)["spectral_flow"]);
    let rows: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("rellich_branches.json")).unwrap()).unwrap();
    let rows = rows.as_array().unwrap();
    assert!(rows.len() < rows_full - 1);
    assert!(rows[0]["kappa"].is_null() && rows[0]["branch_id"] == 0);
}

#[test]
fn coarse_sampling_refines_or_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["rellich", "--samples", "8", "--out", dir.path().to_str().unwrap()]);
    match out.status.code() {
        Some(0) => assert_eq!(json(&out)["spectral_flow"], 1),
        Some(1) => assert!(String::from_utf8_lossy(&out.stderr).contains("theta in")),
        other => panic!("unexpected exit {other:?}"),
    }
    assert_eq!(run(&["rellich", "--samples", "4"]).status.code(), Some(2));
}

#[test]
fn verify_cayley_suite() {
    let out = run(&["verify", "--suite", "cayley", "--trials", "200", "--seed", "42", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let rep = json(&out);
    assert_eq!(rep["pass"], true);
    let checks = rep["suites"][0]["checks"].as_array().unwrap();
    let fact = checks.iter().find(|c| c["name"] == "U(A′) = U(B)_H U(A)").unwrap();
    assert!(fact["residual"].as_f64().unwrap() <= 1e-9);
    let again = run(&["verify", "--suite", "cayley", "--trials", "200", "--seed", "42", "--format", "json"]);
    assert_eq!(out.stdout, again.stdout);
}

#[test]
fn verify_sturm_and_csv_format() {
    let out = run(&["verify", "--suite", "sturm"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("suite,check,residual,tol,pass\n"));
    assert!(text.lines().any(|l| l.starts_with("sturm,\"M(0) closed form\"") && l.ends_with(",true")));
}

#[test]
fn verify_input_errors_and_failures() {
    assert_eq!(run(&["verify", "--suite", "bogus"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "--trials", "0"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "--tol", "-1"]).status.code(), Some(2));
    let strict = bin().args(["verify", "--suite", "gelfand", "--trials", "5"]).env("TRIPLETFLOW_TOL", "1e-300").output().unwrap();
    assert_eq!(strict.status.code(), Some(1));
    let junk = bin().args(["verify", "--suite", "gelfand"]).env("TRIPLETFLOW_TOL", "abc").output().unwrap();
    assert_eq!(junk.status.code(), Some(2));
}

#[test]
fn verify_writes_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("verify.json");
    let out = run(&["verify", "--suite", "relspace", "--trials", "8", "--format", "json", "--out", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let rep: Value = serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap();
    assert_eq!(rep["suites"][0]["suite"], "relspace");
}

#[test]
fn index_builtin_and_files() {
    let out = run(&["index", "--family", "rellich", "--samples", "360"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["winding"], 1);
    assert_eq!(json(&out)["spectral_flow"], 1);

    let dir = tempfile::tempdir().unwrap();
    let constant = LoopLiteral::from_fn(1, 16, |_| LinearRelation::graph_of(&eye(1)));
    let p = write_loop(dir.path(), "constant.json", &constant);
    let out = run(&["index", "--family", &p]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["winding"], 0);
    assert!(json(&out)["spectral_flow"].is_null());

    let p = write_loop(dir.path(), "mobius.json", &scalar_mobius_loop(64));
    let out = run(&["index", "--family", &p]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["winding"].as_i64().unwrap().abs(), 1);

    let skew = LoopLiteral::from_fn(1, 8, |_| LinearRelation::graph_of(&(eye(1) * I)));
    let p = write_loop(dir.path(), "skew.json", &skew);
    assert_eq!(run(&["index", "--family", &p]).status.code(), Some(2));

    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{ not json").unwrap();
    assert_eq!(run(&["index", "--family", bad.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(run(&["index", "--family", "/no/such/file.json"]).status.code(), Some(2));
}

#[test]
fn coarse_loop_file_names_interval() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_loop(dir.path(), "coarse.json", &scalar_mobius_loop(3));
    let out = run(&["index", "--family", &p]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("theta in"));
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
    assert_eq!(run(&[]).status.code(), Some(2));
}
