use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn pct(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pct")).current_dir(dir).args(args).output().expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = pct(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn generate_train_predict_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["generate", "--profile", "m2", "--total", "60", "--seed", "3", "--out", "train.jsonl"]);
    ok(d, &["generate", "--profile", "m2", "--total", "30", "--seed", "4", "--out", "test.jsonl"]);
    assert_eq!(fs::read_to_string(d.join("train.jsonl")).unwrap().lines().count(), 60);
    ok(d, &["augment", "--data", "test.jsonl", "--out", "test.aug.jsonl"]);
    ok(
        d,
        &[
            "train",
            "--train",
            "train.jsonl",
            "--pct",
            "--epochs",
            "4",
            "--warmup",
            "1",
            "--hidden",
            "8",
            "--model",
            "model.json",
            "--report",
            "report.json",
        ],
    );
    let report: Value = serde_json::from_str(&fs::read_to_string(d.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["epochs"].as_array().unwrap().len(), 4);
    assert_eq!(report["examples"], 60);
    ok(
        d,
        &[
            "predict",
            "--model",
            "model.json",
            "--data",
            "test.jsonl",
            "--augmented",
            "test.aug.jsonl",
            "--out",
            "preds.jsonl",
        ],
    );
    let preds = fs::read_to_string(d.join("preds.jsonl")).unwrap();
    assert!(preds.lines().count() > 30);
    assert!(preds.contains("/q0"));
    let table = ok(
        d,
        &[
            "evaluate",
            "--predictions",
            "preds.jsonl",
            "--data",
            "test.jsonl",
            "--augmented",
            "test.aug.jsonl",
            "--json",
            "eval.json",
        ],
    );
    assert!(table.starts_with("Depth"));
    assert!(table.lines().any(|l| l.starts_with("Total")));
    let eval: Value = serde_json::from_str(&fs::read_to_string(d.join("eval.json")).unwrap()).unwrap();
    assert_eq!(eval["total"]["ba"]["total"], 30);
}

#[test]
fn generation_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let a = ok(d, &["generate", "--dataset", "rulebert", "--profile", "m3", "--total", "20", "--seed", "9"]);
    let b = ok(d, &["generate", "--dataset", "rulebert", "--profile", "m3", "--total", "20", "--seed", "9"]);
    assert_eq!(a, b);
    assert!(a.lines().all(|l| l.contains("\"rb-d")));
}

#[test]
fn solve_reports_relational_chain() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(
        d.join("p.jsonl"),
        r#"{"id":"left","query":"Child(Mike,David)","facts":[{"atom":"Cousin(David,Ann)"},{"atom":"Child(Mike,Ann)"}],"rules":[{"premises":["Spouse(A,B)","Child(C,B)"],"conclusion":"Child(C,A)","prob":0.9},{"premises":["Cousin(A,B)"],"conclusion":"Spouse(A,B)","prob":0.15}]}
{"id":"none","query":"Round(Fiona)","facts":[{"atom":"Big(Dave)"}],"rules":[]}
"#,
    )
    .unwrap();
    let out = ok(d, &["solve", "--data", "p.jsonl"]);
    let rows: Vec<Value> = out.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!((rows[0]["gold_prob"].as_f64().unwrap() - 0.135).abs() < 1e-9);
    assert_eq!(rows[0]["depth"], 2);
    assert_eq!(rows[0]["kind"], "Simple");
    assert_eq!(rows[0]["proof"].as_array().unwrap().len(), 2);
    assert_eq!(rows[1]["gold_prob"], 0.0);
    assert!(rows[1]["depth"].is_null());
}

#[test]
fn bad_input_fails_with_context() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("bad.jsonl"), "{\"id\":\"x\",\"query\":\"not an atom\"}\n").unwrap();
    let out = pct(d, &["solve", "--data", "bad.jsonl"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
    let out = pct(d, &["evaluate", "--predictions", "missing.jsonl", "--data", "bad.jsonl"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.jsonl"));
}
