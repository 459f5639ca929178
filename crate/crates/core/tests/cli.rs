mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn gpscale(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gpscale"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("config.json");
    fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

const CONFIG: &str = r#"{
    "domain": "gripper",
    "training_sizes": {"min": 5, "max": 7},
    "seed": 3,
    "eval": {"max_size": 16, "min_samples": 10},
    "checkpoints": ["all-fail", "stepwise:9", {"kind": "stepwise", "cutoff": 12, "value_error": 0.5}]
}"#;

#[test]
fn csp_solve_prints_one_object_per_line() {
    let o = gpscale(&["csp", "solve", "--domain", "childsnack", "--size", "13"]);
    assert_eq!(code(&o), 0);
    let lines: Vec<serde_json::Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 8);
    assert!(lines.iter().all(|l| l.get("children").is_some()));
}

#[test]
fn csp_ledger_covers_every_domain() {
    let o = gpscale(&["csp", "ledger"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 5);
}

#[test]
fn unknown_domain_is_a_config_error() {
    let o = gpscale(&["csp", "solve", "--domain", "sokoban", "--size", "4"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("sokoban"));
}

#[test]
fn bad_arguments_exit_with_two() {
    assert_eq!(code(&gpscale(&["evaluate", "--domain", "gripper"])), 2);
    assert_eq!(code(&gpscale(&["run", "--instance", "x.json", "--policy", "bernoulli:7", "--bound", "3"])), 2);
}

#[test]
fn missing_file_is_an_io_error() {
    let o = gpscale(&["run", "--instance", "/nonexistent/i.json", "--policy", "random", "--bound", "3"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn generate_is_deterministic_and_emits_pddl() {
    let a = gpscale(&["generate", "--domain", "ferry", "--size", "7", "--seed", "4"]);
    let b = gpscale(&["generate", "--domain", "ferry", "--size", "7", "--seed", "4"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let p = gpscale(&["generate", "--domain", "blocksworld", "--param", "blocks=3", "--pddl"]);
    assert!(stdout(&p).starts_with("(define (problem"));
    let bad = gpscale(&["generate", "--domain", "gripper", "--size", "3"]);
    assert_eq!(code(&bad), 2);
}

#[test]
fn run_and_oracle_on_a_generated_instance() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("g.json");
    let g = gpscale(&["generate", "--domain", "gripper", "--param", "balls=2"]);
    fs::write(&inst, &g.stdout).unwrap();
    let inst = inst.to_str().unwrap();

    let plan = gpscale(&["oracle", "plan", "--instance", inst]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&plan)).unwrap();
    assert_eq!(v["plan"].as_array().unwrap().len(), 5);

    let values = gpscale(&["oracle", "values", "--instance", inst]);
    assert!(stdout(&values).starts_with("digest,value\n"));

    let run = gpscale(&["run", "--instance", inst, "--policy", "oracle-greedy", "--bound", "10"]);
    assert_eq!(code(&run), 0);
    let r: serde_json::Value = serde_json::from_str(&stdout(&run)).unwrap();
    assert_eq!(r["solved"], true);
    assert_eq!(r["steps"], 5);
    assert_eq!(r["trace_digests"].as_array().unwrap().len(), 6);

    let wrong = gpscale(&["run", "--domain", "ferry", "--instance", inst, "--policy", "random", "--bound", "10"]);
    assert_eq!(code(&wrong), 2);
}

#[test]
fn policy_failure_in_run_exits_with_four() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("g.json");
    fs::write(&inst, gpscale(&["generate", "--domain", "gripper", "--param", "balls=1"]).stdout).unwrap();
    let argv = common::bridge_argv("malformed").join(" ");
    let o = gpscale(&["run", "--instance", inst.to_str().unwrap(), "--policy", &format!("bridge:{argv}"), "--bound", "10"]);
    assert_eq!(code(&o), 4);
    let r: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r["termination"], "PolicyError");
}

#[test]
fn evaluate_writes_curve_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("eval");
    let o = gpscale(&[
        "evaluate", "--domain", "blocksworld", "--policy", "stepwise:5", "--bound", "100",
        "--min-samples", "10", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("curve.csv")).unwrap();
    let sizes: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(sizes, ["2", "3", "4", "5", "6", "7"]);
    assert!(out.join("curve.json").exists());
    assert!(fs::read_to_string(out.join("coverage.svg")).unwrap().starts_with("<svg"));
}

#[test]
fn evaluate_rejects_bad_parameters() {
    let o = gpscale(&["evaluate", "--domain", "gripper", "--policy", "random", "--bound", "10", "--epsilon", "0"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn validate_scores_with_each_method() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let dynamic = gpscale(&["validate", "--method", "dynamic", "--policy", "stepwise:10", "--config", &cfg]);
    assert_eq!(code(&dynamic), 0, "{}", String::from_utf8_lossy(&dynamic.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&dynamic)).unwrap();
    assert_eq!(v["report"]["score"], 3.0);
    assert_eq!(v["report"]["last_size"], 11);
    let fixed = gpscale(&["validate", "--method", "coverage", "--policy", "stepwise:10", "--config", &cfg]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&fixed)).unwrap();
    assert_eq!(v["score"], 1.0);
    let loss = gpscale(&["validate", "--method", "loss", "--policy", "random", "--config", &cfg]);
    assert_eq!(code(&loss), 4, "a policy without values cannot be scored by loss");
    let bad = gpscale(&["validate", "--method", "vibes", "--policy", "random", "--config", &cfg]);
    assert_eq!(code(&bad), 2);
}

#[test]
fn experiment_is_reproducible_and_report_reemits() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let ra = gpscale(&["experiment", "--config", &cfg, "--out", a.to_str().unwrap()]);
    let rb = gpscale(&["experiment", "--config", &cfg, "--out", b.to_str().unwrap()]);
    assert_eq!(code(&ra), 0, "{}", String::from_utf8_lossy(&ra.stderr));
    assert_eq!(ra.stdout, rb.stdout);
    for f in ["report.json", "summary.csv", "scores.csv", "coverage.svg", "curves/dynamic.csv", "datasets/manifest.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let summary = stdout(&ra);
    assert!(summary.starts_with("method,selected,scale,sumcov\n"));
    assert!(summary.contains("dynamic,2,12,"), "{summary}");

    // re-emit with the other SumCov variant
    let r = dir.path().join("r");
    let rep = gpscale(&[
        "report", "--input", a.join("report.json").to_str().unwrap(),
        "--out", r.to_str().unwrap(), "--sumcov", "up-to-scale",
    ]);
    assert_eq!(code(&rep), 0, "{}", String::from_utf8_lossy(&rep.stderr));
    assert!(r.join("coverage.svg").exists());
    let line = |s: &str| s.lines().find(|l| l.starts_with("dynamic")).unwrap().to_owned();
    let through: f64 = line(&summary).rsplit(',').next().unwrap().parse().unwrap();
    let up: f64 = line(&stdout(&rep)).rsplit(',').next().unwrap().parse().unwrap();
    assert!(up <= through);
}

#[test]
fn build_datasets_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let out = dir.path().join("d");
    let o = gpscale(&["build-datasets", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["validation_sizes"], serde_json::json!([8, 9, 10]));
    assert_eq!(m["unsolved"], serde_json::json!([]));
    for f in ["training.json", "validation.json", "labels.csv", "csp_ledger.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn unknown_config_fields_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"domain": "gripper", "colour": "blue"}"#);
    let o = gpscale(&["build-datasets", "--config", &cfg, "--out", dir.path().join("x").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}
