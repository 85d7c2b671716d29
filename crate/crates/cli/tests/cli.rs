use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
        .display()
        .to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sepconv"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

fn scratch(name: &str, contents: &str) -> String {
    let path = std::env::temp_dir().join(format!("sepconv-{}-{name}", std::process::id()));
    std::fs::write(&path, contents).unwrap();
    path.display().to_string()
}

#[test]
fn malformed_input_exits_2() {
    let bad = scratch("bad.json", "{ not json");
    let out = run(&["check-sep1", "--instance", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));

    let wrong_shape = scratch("shape.json", r#"{"dims": [2], "amps": [[1, 0]]}"#);
    let out = run(&[
        "singular-branch",
        "--op",
        &data("project_site1.json"),
        "--state",
        &wrong_shape,
    ]);
    assert_eq!(out.status.code(), Some(2));

    let missing = run(&["symmetry-audit", "--graph", "/nonexistent/graph.json"]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn unknown_flags_and_bad_parameters_exit_2() {
    assert_eq!(run(&["verify-example", "--bogus"]).status.code(), Some(2));
    assert_eq!(
        run(&["verify-example", "--a", "0.7"]).status.code(),
        Some(2)
    );
    assert_eq!(
        run(&["verify-example", "--which", "4q"]).status.code(),
        Some(2)
    );
    assert_eq!(
        run(&["verify-example", "--a-sweep", "0.1:0.2"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn output_is_deterministic() {
    let args = [
        "check-sep1",
        "--instance",
        &data("five_ring.json"),
        "--a-sweep",
        "0.1:0.3:0.1",
    ];
    let first = run(&args);
    let second = run(&args);
    assert_eq!(first.status.code(), Some(1));
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn sweep_keeps_input_order() {
    let out = run(&[
        "verify-example",
        "--which",
        "5q",
        "--a-sweep",
        "0.05:0.45:0.05",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let rep = json(&out);
    let a: Vec<f64> = rep
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["a"].as_f64().unwrap())
        .collect();
    assert_eq!(a.len(), 9);
    assert!(a.windows(2).all(|w| w[0] < w[1]));
    assert!(rep[0]["report"]["verified"].as_bool().unwrap());
}

#[test]
fn triangle_sep1_is_inconclusive() {
    let out = run(&["check-sep1", "--instance", &data("three_ring.json")]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(json(&out)["verdict"], "Inconclusive");
}

#[test]
fn witness_command() {
    let ex = sepconv::kraus::build_five_qubit_example(0.25).unwrap();
    let (_, w) = ex.witness().unwrap();
    let path = scratch("witness.json", &serde_json::to_string(&w).unwrap());
    let out = run(&[
        "check-witness",
        "--instance",
        &data("five_ring.json"),
        "--witness",
        &path,
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["verdict"], "Feasible");

    // dropping the annihilators leaves a certificate that fails the equation
    let mut bare = serde_json::to_value(&w).unwrap();
    bare["annihilators"] = Value::Array(vec![]);
    let path = scratch("bare.json", &bare.to_string());
    let out = run(&[
        "check-witness",
        "--instance",
        &data("five_ring.json"),
        "--witness",
        &path,
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn trace_monotone_command() {
    let out = run(&[
        "trace-monotone",
        "--instance",
        &data("five_ring.json"),
        "--a",
        "0.25",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let rep = json(&out);
    assert!((rep["trace_g"].as_f64().unwrap() - 32.0).abs() < 1e-9);
    assert!((rep["trace_h"].as_f64().unwrap() - 4.0 / (0.125 + 0.25f64.powi(3))).abs() < 1e-9);
}

#[test]
fn locc_commands() {
    let out = run(&[
        "locc-run",
        "--protocol",
        &data("measure_site1.json"),
        "--state",
        &data("ghz3.json"),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let rep = json(&out);
    let branches = rep["branches"].as_array().unwrap();
    assert_eq!(branches.len(), 2);
    for b in branches {
        assert!((b["probability"].as_f64().unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(b["fully_entangled"], false);
    }

    let out = run(&[
        "locc-run",
        "--protocol",
        &data("filters.json"),
        "--state",
        &data("ghz3.json"),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let rep = json(&out);
    assert_eq!(rep["branches"].as_array().unwrap().len(), 4);
    assert!((rep["total_probability"].as_f64().unwrap() - 1.0).abs() < 1e-10);

    let out = run(&[
        "singular-branch",
        "--op",
        &data("project_site1.json"),
        "--state",
        &data("ghz3.json"),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let rep = json(&out);
    assert!((rep["norm"].as_f64().unwrap().powi(2) - 0.5).abs() < 1e-12);
    assert_eq!(rep["reduced_ranks"], serde_json::json!([1, 1, 1]));

    let a = run(&["singular-branch", "--seed", "9"]);
    let b = run(&["singular-branch", "--seed", "9"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}
