use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn roelab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_roelab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "status {:?}, stderr {}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).expect("stderr is JSON")
}

fn write(dir: &Path, name: &str, value: &Value) -> String {
    let path = dir.join(name);
    std::fs::write(&path, value.to_string()).unwrap();
    path.to_str().unwrap().to_string()
}

fn point_metric(dir: &Path, half_width: i64) -> String {
    let space = stdout_json(&roelab(&["space", "gen", "--half-width", &half_width.to_string()]));
    let space = write(dir, "space.json", &space);
    let metric = stdout_json(&roelab(&["metric", "build", "--space", &space, "--kind", "rho-point", "--center", "0"]));
    write(dir, "metric.json", &metric)
}

#[test]
fn point_metric_sequence_is_balls() {
    let dir = tempfile::tempdir().unwrap();
    let metric = point_metric(dir.path(), 5);
    let seq = stdout_json(&roelab(&["seq", "extract", "--metric", &metric]));
    let sets = seq["sets"].as_array().unwrap();
    // the origin is point 5; D_n is the ball of radius (n - 1) / 2 around it
    for (i, set) in sets.iter().enumerate() {
        let n = i as i64 + 1;
        let radius = (n - 1) / 2;
        let expected: Vec<i64> = (5 - radius.min(5)..=5 + radius.min(5)).collect();
        let got: Vec<i64> = set.as_array().unwrap().iter().map(|v| v.as_i64().unwrap()).collect();
        assert_eq!(got, expected, "D_{n}");
    }
}

#[test]
fn compare_against_balls() {
    let dir = tempfile::tempdir().unwrap();
    let metric = point_metric(dir.path(), 5);
    let space = dir.path().join("space.json");
    let balls = stdout_json(&roelab(&[
        "metric",
        "build",
        "--space",
        space.to_str().unwrap(),
        "--kind",
        "rho-balls",
        "--scale",
        "2",
    ]));
    let balls = write(dir.path(), "balls.json", &balls);
    let cmp = stdout_json(&roelab(&["seq", "compare", "--metric", &metric, "--other", &balls]));
    assert_eq!(cmp["equivalent_within_horizon"], true);
}

#[test]
fn classify_tent() {
    let out = stdout_json(&roelab(&["fn", "classify"]));
    assert_eq!(out["verdict"], "HIGSON_NOT_C0");
}

#[test]
fn classify_writes_curves() {
    let dir = tempfile::tempdir().unwrap();
    let out = roelab(&[
        "fn",
        "classify",
        "--family",
        r#"{"kind": "z_boxes", "half_widths": [10, 20, 40]}"#,
        "--function",
        r#"{"kind": "ball", "radius": 3}"#,
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(stdout_json(&out)["verdict"], "IN_C0");
    assert!(dir.path().join("classification.json").exists());
    assert!(dir.path().join("w81.csv").exists());
}

#[test]
fn zero_derivation_solves_to_zero() {
    let unit = |r: usize, c: usize| serde_json::json!({"dim": 2, "entries": [{"row": r, "col": c, "re": 1.0, "im": 0.0}]});
    let zero = serde_json::json!({"dim": 2, "entries": []});
    let doc = serde_json::json!({
        "generators": [unit(0, 0), unit(0, 1), unit(1, 0)],
        "values": [zero, zero, zero],
    });
    let out = stdout_json(&roelab(&["deriv", "solve", "--presentation", &doc.to_string()]));
    assert_eq!(out["residual"], 0.0);
    assert!(out["b"]["re"].as_array().unwrap().iter().all(|v| v == 0.0));
}

#[test]
fn inner_derivation_class_is_diagonal() {
    let dir = tempfile::tempdir().unwrap();
    let metric = point_metric(dir.path(), 3);
    // d = [·, diag(0..7)] on the standard generators of M_7
    let n = 7;
    let unit = |r: usize, c: usize, v: f64| serde_json::json!({"dim": n, "entries": [{"row": r, "col": c, "re": v, "im": 0.0}]});
    let mut generators = Vec::new();
    let mut values = Vec::new();
    for x in 0..n {
        generators.push(unit(x, x, 1.0));
        values.push(serde_json::json!({"dim": n, "entries": []}));
    }
    for y in 1..n {
        // [E_0y, b] = (b_yy - b_00) E_0y for diagonal b
        generators.push(unit(0, y, 1.0));
        values.push(unit(0, y, y as f64));
        generators.push(unit(y, 0, 1.0));
        values.push(unit(y, 0, -(y as f64)));
    }
    let doc = serde_json::json!({"generators": generators, "values": values});
    let doc = write(dir.path(), "d.json", &doc);
    let out = stdout_json(&roelab(&["deriv", "class", "--presentation", &doc, "--metric", &metric]));
    assert!(out["solution"]["residual"].as_f64().unwrap() < 1e-9);
    assert_eq!(out["off_diagonal_in_bimodule"], true);
    let rep: Vec<f64> = out["representative"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v[0].as_f64().unwrap())
        .collect();
    for (x, v) in rep.iter().enumerate() {
        assert!((v - (x as f64 - 3.0)).abs() < 1e-9, "{rep:?}");
    }
}

#[test]
fn hochschild_commands() {
    let dir = tempfile::tempdir().unwrap();
    let metric = point_metric(dir.path(), 6);
    let hh0 = stdout_json(&roelab(&["hh0", "--metric", &metric]));
    assert_eq!(hh0["dimension"], 1);
    assert_eq!(hh0["identity_escapes"], true);

    let cup = stdout_json(&roelab(&[
        "cup", "--metric", &metric, "--f", r#"{"kind": "tent"}"#, "--g", r#"{"kind": "parity"}"#, "--tol", "1e-12",
    ]));
    assert_eq!(cup["sign"], -1);

    let odd = stdout_json(&roelab(&[
        "cocycle", "--metric", &metric, "--k", "1", "--f", r#"{"kind": "tent"}"#, "--probes", "20",
    ]));
    assert_eq!(odd["cocycle"]["sign"], 1);
    assert!(odd["cocycle"]["cocycle_residual"].as_f64().unwrap() < 1e-12);
}

#[test]
fn operator_profile_from_triplets() {
    let dir = tempfile::tempdir().unwrap();
    let metric = point_metric(dir.path(), 3);
    let csv = dir.path().join("a.csv");
    std::fs::write(&csv, "row,col,re,im\n0,6,1,0\n3,3,2,0\n").unwrap();
    let out = stdout_json(&roelab(&["op", "profile", "--operator", csv.to_str().unwrap(), "--metric", &metric]));
    assert_eq!(out["sound"], true);
    let lower = out["profile"]["lower"].as_array().unwrap();
    assert_eq!(lower[0], 2.0);
}

#[test]
fn run_bundled_and_empty() {
    let dir = tempfile::tempdir().unwrap();
    let out = roelab(&["run", "empty", "--out", dir.path().to_str().unwrap()]);
    let report = stdout_json(&out);
    assert_eq!(report["status"], "ok");
    assert_eq!(report["experiments"].as_array().unwrap().len(), 0);
    assert!(dir.path().join("report.json").exists());

    let report = stdout_json(&roelab(&["run", "outer_tent"]));
    assert_eq!(report["experiments"][1]["verdict"], "HIGSON_NOT_C0");
    assert_eq!(report["experiments"][1]["details"]["outer"], true);
}

#[test]
fn config_errors_exit_2_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\n  \"name\": \"x\",\n  \"colour\": 1\n}").unwrap();
    let out = roelab(&["run", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_json(&out);
    assert_eq!(err["error"], "config");
    assert_eq!(err["line"], 3);

    let out = roelab(&["no-such-command"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["exit_code"], 2);
}

fn scenario(dir: &Path, experiments: &str) -> String {
    let text = format!(
        r#"{{
        "name": "t",
        "family": {{"kind": "z_boxes", "half_widths": [25, 50, 100]}},
        "metric": {{"kind": "rho_point"}},
        "functions": {{"tent": {{"kind": "tent"}}}},
        "experiments": [{experiments}]
    }}"#
    );
    let path = dir.join("scenario.json");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn inconclusive_horizon_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    // with ratio 1 the rising tails 0.75, 1, 1 neither decay nor exceed
    // their maximum
    let path = scenario(
        dir.path(),
        r#"{"kind": "classify", "id": "c", "function": "tent", "decay_ratio": 1.0}"#,
    );
    let out = roelab(&["run", &path]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stderr_json(&out)["error"], "nonconvergence");
}

#[test]
fn failed_invariant_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    // more samples first, so the medians increase
    let path = scenario(
        dir.path(),
        r#"{"kind": "averaging", "id": "a", "points": 6, "samples": [4096, 2], "trials": 5}"#,
    );
    let out = roelab(&["run", &path]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["status"], "invariant_violation");
}

#[test]
fn same_seed_same_report() {
    let strip = |mut v: Value| {
        v.as_object_mut().unwrap().remove("generated_at");
        v
    };
    let a = strip(stdout_json(&roelab(&["run", "hochschild_identities", "--seed", "9"])));
    let b = strip(stdout_json(&roelab(&["run", "hochschild_identities", "--seed", "9"])));
    assert_eq!(a, b);
    assert_eq!(a["seed"], 9);
}
