use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn jlo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jlo")).args(args).output().expect("spawn jlo")
}

fn run_json(args: &[&str]) -> (i32, Value) {
    let out = jlo(args);
    let v = serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout))
    });
    (out.status.code().unwrap(), v)
}

fn complex(v: &Value) -> (f64, f64) {
    (v[0].as_f64().unwrap(), v[1].as_f64().unwrap())
}

#[test]
fn index_on_zero_mode_triple_is_one() {
    let (code, v) = run_json(&["index", "--input", data("zero_mode.json").to_str().unwrap()]);
    assert_eq!(code, 0);
    let (re, im) = complex(&v["result"]["value"]);
    assert!((re - 1.0).abs() < 1e-12 && im.abs() < 1e-12);
    assert_eq!(v["command"], "index");
    assert!(v["provenance"]["seed"].is_u64());
}

#[test]
fn pair_on_exchange_with_gamma_is_two() {
    let (code, v) = run_json(&["pair", "--input", data("exchange.json").to_str().unwrap()]);
    assert_eq!(code, 0);
    let (re, im) = complex(&v["result"]["value"]);
    assert!((re - 2.0).abs() < 1e-10 && im.abs() < 1e-10, "{re} {im}");
}

#[test]
fn validate_on_non_anticommuting_q_exits_one() {
    let (code, v) = run_json(&["validate", "--input", data("bad_q.json").to_str().unwrap()]);
    assert_eq!(code, 1);
    let checks = v["result"]["validation"]["checks"].as_array().unwrap();
    assert!(checks.iter().any(|c| c["pass"] == false && c["residual"].as_f64().unwrap() > 0.5));
    let (code, _) = run_json(&["validate", "--input", data("exchange.json").to_str().unwrap()]);
    assert_eq!(code, 0);
}

#[test]
fn index_on_invalid_triple_exits_one() {
    let (code, _) = run_json(&["index", "--input", data("bad_q.json").to_str().unwrap()]);
    assert_eq!(code, 1);
}

#[test]
fn io_and_schema_errors_exit_three() {
    let (code, v) = run_json(&["index", "--input", "/nonexistent/triple.json"]);
    assert_eq!(code, 3);
    assert_eq!(v["error"]["kind"], "Io");
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("t.json");
    std::fs::write(&p, r#"{"dim": 2, "Q": [[0, 1]], "gamma": [[1, 0], [0, -1]]}"#).unwrap();
    let (code, v) = run_json(&["index", "--input", p.to_str().unwrap()]);
    assert_eq!(code, 3);
    assert_eq!(v["error"]["kind"], "Schema");
    let (code, _) = run_json(&["sweep", "--input", data("swapped.json").to_str().unwrap(), "--lambda-grid", "1:0:3"]);
    assert_eq!(code, 3);
}

#[test]
fn non_convergence_exits_two() {
    let (code, v) = run_json(&[
        "pair",
        "--input",
        data("exchange.json").to_str().unwrap(),
        "--max-level",
        "2",
        "--tol",
        "1e-300",
    ]);
    assert_eq!(code, 2, "{v}");
}

#[test]
fn cyclic_shorthand_expands_and_sweep_is_flat() {
    let input = data("swapped.json");
    let (code, v) = run_json(&["index", "--input", input.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(v["result"]["characters"].as_array().unwrap().len(), 2);
    let (code, v) = run_json(&["sweep", "--input", input.to_str().unwrap(), "--lambda-grid", "0:1:5"]);
    assert_eq!(code, 0, "{v}");
    let rows = v["result"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 5);
    let lambdas: Vec<f64> = rows.iter().map(|r| r["lambda"].as_f64().unwrap()).collect();
    assert!(lambdas.windows(2).all(|w| w[0] < w[1]));
    assert!(v["result"]["spread"].as_f64().unwrap() < 1e-6);
}

#[test]
fn sweep_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let o = jlo(&[
        "sweep",
        "--input",
        data("swapped.json").to_str().unwrap(),
        "--lambda-grid",
        "0:0.5:3",
        "--output",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("lambda,eps,re,im,diagnostics"));
    assert_eq!(lines.count(), 3);
}

#[test]
fn beta_scan_and_endpoint() {
    let input = data("swapped.json");
    let (code, v) = run_json(&["beta-scan", "--input", input.to_str().unwrap(), "--beta-list", "0.5,1,2"]);
    assert_eq!(code, 0, "{v}");
    assert!(v["result"]["spread"].as_f64().unwrap() < 1e-8);
    let (code, v) = run_json(&[
        "endpoint",
        "--input",
        input.to_str().unwrap(),
        "--lambda-grid",
        "0:1:3",
        "--eps-grid",
        "0:0.2:3",
    ]);
    assert_eq!(code, 0, "{v}");
    assert_eq!(v["result"]["table"]["rows"].as_array().unwrap().len(), 9);
}

#[test]
fn jlo_exact_and_quadrature_agree() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("t.json");
    std::fs::write(
        &p,
        r#"{"dim": 2, "Q": [[0, 1], [1, 0]], "gamma": [[1, 0], [0, -1]],
            "args": [[[1, 0], [0, -1]], [[1, 0], [0, -1]], [[1, 0], [0, -1]]]}"#,
    )
    .unwrap();
    let (code, exact) = run_json(&["jlo", "--input", p.to_str().unwrap()]);
    assert_eq!(code, 0, "{exact}");
    let (code, mc) = run_json(&["jlo", "--input", p.to_str().unwrap(), "--method", "quadrature", "--seed", "7"]);
    assert_eq!(code, 0);
    let (e, _) = complex(&exact["result"]["value"]);
    let (q, _) = complex(&mc["result"]["value"]);
    let err = mc["result"]["estimated_error"].as_f64().unwrap();
    assert!((e - q).abs() <= err + 1e-12, "{e} {q} {err}");
}

#[test]
fn split_commands() {
    let input = data("pauli_split.json");
    let (code, _) = run_json(&["validate", "--input", input.to_str().unwrap()]);
    assert_eq!(code, 0);
    let (code, v) = run_json(&["split-pair", "--input", input.to_str().unwrap()]);
    assert_eq!(code, 0, "{v}");
    let (code, v) = run_json(&["coupling-sweep", "--input", input.to_str().unwrap(), "--lambda-grid", "0:1:3"]);
    assert_eq!(code, 0, "{v}");
    assert_eq!(v["result"]["spread"].as_f64().unwrap(), 0.0);
}

#[test]
fn output_is_deterministic_and_uses_seventeen_digits() {
    let a = jlo(&["pair", "--input", data("exchange.json").to_str().unwrap()]);
    let b = jlo(&["pair", "--input", data("exchange.json").to_str().unwrap()]);
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.contains("2.0000000000000000e0") || text.contains("1.9999999999999"), "{text}");
}
