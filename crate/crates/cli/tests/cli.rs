//! End-to-end runs of the `ellipsis` binary: exit codes, file formats and
//! report determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ellipsis_cli::commands::VerifyReport;
use tempfile::TempDir;

const HARMONIC: &str = r#"{"dimension": 1, "mode": "exact", "basis": [
  {"terms": [{"freq": [1], "phase": "sin", "coeff": "1"}]},
  {"terms": [{"freq": [1], "phase": "cos", "coeff": "1"}]}]}"#;

const SINE: &str = r#"{"dimension": 1, "mode": "float", "basis": [
  {"terms": [{"freq": [1], "phase": "sin", "coeff": 1}]}]}"#;

const LAPLACIAN: &str = r#"{"dimension": 1, "mode": "float", "order": 2,
  "terms": [{"index": [2], "coeff": {"kind": "const", "value": 1}}]}"#;

const PRODUCT: &str = r#"{"dimension": 2, "mode": "float", "basis": [
  {"terms": [{"freq": [1, 1], "phase": "cos", "coeff": "-1/2"},
             {"freq": [1, -1], "phase": "cos", "coeff": "1/2"}]}]}"#;

const CORPUS: [&str; 4] = [
    HARMONIC,
    r#"{"dimension": 1, "mode": "float", "basis": [
      {"terms": [{"freq": [0], "phase": "cos", "coeff": 1}]},
      {"terms": [{"freq": [1], "phase": "sin", "coeff": 1}]}]}"#,
    r#"{"dimension": 1, "mode": "exact", "basis": [
      {"terms": [{"freq": [1], "phase": "cos", "coeff": "1"}, {"freq": [2], "phase": "sin", "coeff": "3/2"}]},
      {"terms": [{"freq": [0], "phase": "cos", "coeff": "1"}, {"freq": [1], "phase": "cos", "coeff": "1"}]}]}"#,
    r#"{"dimension": 2, "mode": "float", "basis": [
      {"terms": [{"freq": [1, 0], "phase": "sin", "coeff": 1}]},
      {"terms": [{"freq": [1, 0], "phase": "cos", "coeff": 1}]},
      {"terms": [{"freq": [0, 1], "phase": "sin", "coeff": 1}]},
      {"terms": [{"freq": [0, 1], "phase": "cos", "coeff": 1}]}]}"#,
];

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        Workspace {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn file(&self, name: &str, text: &str) -> PathBuf {
        let p = self.dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

fn run(args: &[&dyn AsRef<std::ffi::OsStr>]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ellipsis"))
        .args(args.iter().map(|a| a.as_ref()))
        .output()
        .unwrap()
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn annihilate_then_verify_exact_pair() {
    let w = Workspace::new();
    let basis = w.file("basis.json", HARMONIC);
    let out = w.path("out");
    let r = run(&[&"annihilate", &basis, &"--out", &out]);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    let op = out.join("operator.json");
    assert!(read(&op).contains("\"mode\": \"exact\""));
    let report = w.path("verify.json");
    let r = run(&[&"verify", &op, &basis, &"--report", &report]);
    assert_eq!(r.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&r.stdout).contains("PASS"));
    let v: VerifyReport = serde_json::from_str(&read(&report)).unwrap();
    assert_eq!(v.exact_zero, Some(true));
    assert_eq!(v.residual_sup, 0.0);
}

#[test]
fn corpus_annihilators_verify() {
    let w = Workspace::new();
    for (i, text) in CORPUS.iter().enumerate() {
        let basis = w.file(&format!("basis{}.json", i), text);
        let out = w.path(&format!("out{}", i));
        let r = run(&[&"annihilate", &basis, &"--grid", &"32", &"--out", &out]);
        assert_eq!(r.status.code(), Some(0), "basis {}: {}", i, String::from_utf8_lossy(&r.stderr));
        let report = w.path(&format!("verify{}.json", i));
        let r = run(&[&"verify", &out.join("operator.json"), &basis, &"--report", &report]);
        assert_eq!(r.status.code(), Some(0), "basis {}", i);
        let v: VerifyReport = serde_json::from_str(&read(&report)).unwrap();
        assert!(v.passed && v.residual_sup <= 1e-9, "basis {}: {:e}", i, v.residual_sup);
    }
}

#[test]
fn verify_rejects_non_annihilator() {
    let w = Workspace::new();
    let r = run(&[&"verify", &w.file("lap.json", LAPLACIAN), &w.file("sin.json", SINE)]);
    assert_eq!(r.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&r.stdout).contains("FAIL"));
}

#[test]
fn malformed_input_is_invalid() {
    let w = Workspace::new();
    let truncated = w.file("t.json", &SINE[..SINE.len() / 2]);
    assert_eq!(run(&[&"analyze", &truncated]).status.code(), Some(2));
    let unknown = w.file("u.json", &SINE.replace("\"mode\"", "\"colour\": 1, \"mode\""));
    assert_eq!(run(&[&"analyze", &unknown]).status.code(), Some(2));
    let dependent = w.file("d.json", &CORPUS[1].replace("\"freq\": [1]", "\"freq\": [0]").replace("sin", "cos"));
    assert_eq!(run(&[&"analyze", &dependent]).status.code(), Some(2));
    let missing = w.path("missing.json");
    assert_eq!(run(&[&"analyze", &missing]).status.code(), Some(2));
}

#[test]
fn constant_rank_on_varying_rank_is_inconclusive() {
    // a coarse rank tolerance drops the rank where the jet is small
    let w = Workspace::new();
    let basis = w.file("p.json", PRODUCT);
    let r = run(&[
        &"annihilate",
        &basis,
        &"--method",
        &"constant-rank",
        &"--grid",
        &"16",
        &"--rank-tol",
        &"0.5",
        &"--no-lift",
        &"--out",
        &w.path("out"),
    ]);
    assert_eq!(r.status.code(), Some(3), "{}", String::from_utf8_lossy(&r.stderr));
}

#[test]
fn stratified_product_chain() {
    let w = Workspace::new();
    let basis = w.file("p.json", PRODUCT);
    let report = w.path("strata.json");
    let r = run(&[&"stratify", &basis, &"--grid", &"16", &"--report", &report]);
    assert_eq!(r.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&read(&report)).unwrap();
    let stages = v["stages"].as_array().unwrap();
    assert_eq!(stages.len(), 4);
}

#[test]
fn reports_are_deterministic() {
    let w = Workspace::new();
    let basis = w.file("basis.json", HARMONIC);
    let (a, b) = (w.path("a.json"), w.path("b.json"));
    for p in [&a, &b] {
        assert_eq!(run(&[&"analyze", &basis, &"--grid", &"16", &"--report", p]).status.code(), Some(0));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let (c, d) = (w.path("c"), w.path("d"));
    for p in [&c, &d] {
        assert_eq!(run(&[&"annihilate", &basis, &"--out", p]).status.code(), Some(0));
    }
    assert_eq!(
        std::fs::read(c.join("operator.json")).unwrap(),
        std::fs::read(d.join("operator.json")).unwrap()
    );
}

#[test]
fn lossy_float_coefficient_warns() {
    let w = Workspace::new();
    let basis = w.file("b.json", &SINE.replace("\"coeff\": 1", "\"coeff\": \"1/3\""));
    let r = run(&[&"analyze", &basis, &"--grid", &"8"]);
    assert_eq!(r.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&r.stderr).contains("rounded"));
}

#[test]
fn sobolev_and_witness_reports() {
    let w = Workspace::new();
    let report = w.path("s.json");
    let r = run(&[&"sobolev", &w.file("b.json", HARMONIC), &"--k", &"2", &"--report", &report]);
    assert_eq!(r.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&read(&report)).unwrap();
    assert_eq!(v["constant_squared"], "tau^4 + tau^2 + 1");
    let report = w.path("w.json");
    let r = run(&[&"witness", &"--nmax", &"5", &"--order", &"3", &"--report", &report]);
    assert_eq!(r.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&read(&report)).unwrap();
    assert_eq!(v["refutation"]["certified"], true);
}
