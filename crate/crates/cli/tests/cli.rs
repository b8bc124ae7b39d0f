// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};
use std::process::Command;

const TWO_STATE: &str = r#"{
  "format": "upex-model/1",
  "state_space": {"kind": "finite", "labels": ["a", "b"]},
  "generator": {"kind": "extremes", "matrices": [[[-1, 1], [2, -2]]]},
  "initial": {"kind": "degenerate", "state": 0}
}"#;

const BAD_GENERATOR: &str = r#"{
  "format": "upex-model/1",
  "state_space": {"kind": "finite", "labels": ["a", "b"]},
  "generator": {"kind": "row_intervals", "lower": [[-2, 2], [0, 0]], "upper": [[-1, 1], [0, 0]]},
  "initial": {"kind": "degenerate", "state": 0}
}"#;

fn tutorial(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tutorial")
        .join(name)
}

fn upex(model: &Path, queries: &Path, out: &Path) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_upex"))
        .args(["eval", "--model"])
        .arg(model)
        .arg("--queries")
        .arg(queries)
        .arg("--out")
        .arg(out)
        .status()
        .unwrap()
        .code()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn report(out: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

#[test]
fn empty_query_list_passes() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "m.json", TWO_STATE);
    let q = write(
        dir.path(),
        "q.json",
        r#"{"format": "upex-queries/1", "queries": []}"#,
    );
    assert_eq!(upex(&m, &q, &dir.path().join("out")), 0);
    assert_eq!(
        report(&dir.path().join("out"))["records"],
        serde_json::json!([])
    );
}

#[test]
fn parse_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(
        dir.path(),
        "m.json",
        &TWO_STATE.replace("\"state\": 0", "\"state\": 0,"),
    );
    let q = write(
        dir.path(),
        "q.json",
        r#"{"format": "upex-queries/1", "queries": []}"#,
    );
    assert_eq!(upex(&m, &q, &dir.path().join("out")), 1);
    let missing = dir.path().join("nope.json");
    assert_eq!(upex(&missing, &q, &dir.path().join("out")), 1);
}

#[test]
fn failing_check_exits_two() {
    // validated generators always satisfy the axioms, so the failure comes
    // from a zero tolerance on the semigroup law
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "m.json", TWO_STATE);
    let q = write(
        dir.path(),
        "q.json",
        r#"{"format": "upex-queries/1", "queries": [
            {"kind": "check", "name": "law", "tol": 0.0,
             "check": {"kind": "semigroup", "s": 0.3, "t": 0.4, "gambles": ["coord(0)"], "random": 4}}
        ]}"#,
    );
    let out = dir.path().join("out");
    assert_eq!(upex(&m, &q, &out), 2);
    let r = report(&out);
    assert_eq!(r["records"][0]["status"], "fail");
    assert!(r["records"][0]["value"].as_f64().unwrap() > 0.0);
    assert_eq!(r["passed"], false);
}

#[test]
fn infeasible_model_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "m.json", BAD_GENERATOR);
    let q = write(
        dir.path(),
        "q.json",
        r#"{"format": "upex-queries/1", "queries": []}"#,
    );
    assert_eq!(upex(&m, &q, &dir.path().join("out")), 1);
}

#[test]
fn tutorial_jump_value() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    assert_eq!(
        upex(
            &tutorial("poisson.model.json"),
            &tutorial("poisson.queries.json"),
            &out
        ),
        0
    );
    let r = report(&out);
    let rec = &r["records"][0];
    let v = rec["value"].as_f64().unwrap();
    let eps = rec["error_estimate"].as_f64().unwrap();
    assert!((v - (1.0 - (-0.2f64).exp())).abs() <= 1e-9 + eps, "{v}");
    for rec in r["records"].as_array().unwrap() {
        assert!(rec.get("error_estimate").is_some(), "{rec}");
    }
    let csv = std::fs::read_to_string(out.join("007_rate-condition.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("delta,ratio"));
    let (delta, ratio) = lines.next().unwrap().split_once(',').unwrap();
    assert_eq!(delta, "0.5");
    let exact = (1.0 - (-1.0f64).exp()) / 0.5;
    assert!(
        (ratio.parse::<f64>().unwrap() - exact).abs() < 1e-8,
        "{csv}"
    );
    assert!(out.join("timings.json").exists());
}

#[test]
fn two_state_tutorial_runs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    assert_eq!(
        upex(
            &tutorial("two_state.model.json"),
            &tutorial("two_state.queries.json"),
            &out
        ),
        0
    );
}

#[test]
fn records_keep_input_order() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "m.json", TWO_STATE);
    let queries: Vec<String> = (1..=12)
        .map(|k| {
            format!(
                r#"{{"kind": "eval", "name": "q{k}", "grid": [{}], "gamble": "coord(0)"}}"#,
                k as f64 / 10.0
            )
        })
        .collect();
    let q = write(
        dir.path(),
        "q.json",
        &format!(
            r#"{{"format": "upex-queries/1", "queries": [{}]}}"#,
            queries.join(",")
        ),
    );
    let out = dir.path().join("out");
    assert_eq!(upex(&m, &q, &out), 0);
    let r = report(&out);
    let names: Vec<&str> = r["records"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x["name"].as_str().unwrap())
        .collect();
    let want: Vec<String> = (1..=12).map(|k| format!("q{k}")).collect();
    assert_eq!(names, want);
}
