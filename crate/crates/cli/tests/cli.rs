//! End-to-end checks of the `ocp` binary: exit codes, emitted artifacts,
//! and output shape.

use std::path::Path;
use std::process::Command;

fn ocp() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ocp"))
}

fn write_fixture(dir: &Path) {
    let mut csv = String::from("date,x\n");
    for i in 0..160 {
        let day = format!("2020-{:02}-{:02}", 1 + i / 28, 1 + i % 28);
        csv.push_str(&format!("{day},{}\n", 10.0 + (i as f64 * 0.6).sin() * 3.0));
    }
    std::fs::write(dir.join("series.csv"), csv).unwrap();
    std::fs::write(
        dir.join("manifest.json"),
        r#"{"demo": {"path": "series.csv", "value_column": "x", "date_column": "date"}}"#,
    )
    .unwrap();
}

#[test]
fn run_emits_artifacts_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path());
    let out = dir.path().join("out");
    let output = ocp()
        .args([
            "run",
            "--manifest",
            dir.path().join("manifest.json").to_str().unwrap(),
            "--dataset",
            "demo",
            "--regressor",
            "ar",
            "--method",
            "pid-half-bis",
            "--omega",
            "1",
            "--v",
            "4",
            "--train-window",
            "120",
            "--output-dir",
            out.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("coverage"), "stdout: {stdout}");

    let run_dir = out.join("demo_ar_pid-half-bis");
    let trace = std::fs::read_to_string(run_dir.join("trace.csv")).unwrap();
    assert!(trace.starts_with("t,forecast,truth,score,q_before,miss,gap,relevance,q_after"));
    assert_eq!(trace.lines().count(), 41); // 160 − 120 steps + header
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run_dir.join("report.json")).unwrap())
            .unwrap();
    assert_eq!(report["method"], "pid-half-bis");
    assert_eq!(report["n_steps"], 40);
    assert!(report["config_echo"]["resolved"]["k_i"].is_number());
    assert!(run_dir.join("table.txt").exists());
}

#[test]
fn run_requires_a_dataset_and_valid_method() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path());
    let status = ocp()
        .args([
            "run",
            "--manifest",
            dir.path().join("manifest.json").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(!status.status.success());

    let status = ocp()
        .args([
            "run",
            "--manifest",
            dir.path().join("manifest.json").to_str().unwrap(),
            "--dataset",
            "demo",
            "--method",
            "oracle",
            "--train-window",
            "120",
        ])
        .output()
        .unwrap();
    assert!(!status.status.success());
}

#[test]
fn grid_runs_config_list_and_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path());
    let configs = serde_json::json!([
        {"dataset": "demo", "regressor": "ar", "method": "pid", "train_window": 120},
        {"dataset": "demo", "regressor": "ar", "method": "ogd", "train_window": 120}
    ]);
    std::fs::write(dir.path().join("grid.json"), configs.to_string()).unwrap();
    let out = dir.path().join("out");
    let output = ocp()
        .args([
            "grid",
            "--manifest",
            dir.path().join("manifest.json").to_str().unwrap(),
            "--configs",
            dir.path().join("grid.json").to_str().unwrap(),
            "--output-dir",
            out.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    assert!(out.join("table_demo.txt").exists());
    assert!(out.join("demo_ar_pid/report.json").exists());
    assert!(out.join("demo_ar_ogd/report.json").exists());
}

#[test]
fn suite_verbs_and_exit_codes() {
    let output = ocp()
        .args(["suite", "--name", "pid-coverage", "--seed", "3"])
        .output()
        .unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("indicator_prefix_induction_bound"));
    assert!(stdout.contains("held"));

    let output = ocp()
        .args(["suite", "--name", "unknown-suite"])
        .output()
        .unwrap();
    assert!(!output.status.success());
}

#[test]
fn validate_params_accepts_and_rejects() {
    let output = ocp()
        .args([
            "validate-params",
            "--omega",
            "0.3,0.7",
            "--v",
            "1,10",
            "--alpha",
            "0.1",
        ])
        .output()
        .unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("valid relevance parameters"));
    let f0: f64 = stdout
        .lines()
        .find_map(|l| l.strip_prefix("f(0) = "))
        .and_then(|rest| rest.split_whitespace().next())
        .unwrap()
        .parse()
        .unwrap();
    assert!((f0 - 0.1).abs() < 1e-12);

    let output = ocp()
        .args(["validate-params", "--omega", "0.5,0.6", "--v", "1,10"])
        .output()
        .unwrap();
    assert!(!output.status.success());
}
