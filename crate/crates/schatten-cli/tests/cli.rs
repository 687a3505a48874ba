//! End-to-end tests of the `schatten` binary: exit codes, output schemas,
//! and byte-level determinism.

use std::path::Path;
use std::process::{Command, Output};

fn schatten(args: &[&str], dir: &Path, envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_schatten"));
    cmd.args(args).current_dir(dir);
    for (key, value) in envs {
        cmd.env(key, value);
    }
    cmd.output().expect("binary runs")
}

fn stdout_json(output: &Output) -> serde_json::Value {
    serde_json::from_slice(&output.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}):\n{}",
            String::from_utf8_lossy(&output.stdout)
        )
    })
}

#[test]
fn norm_depolarizing_nu_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let out = schatten(
        &[
            "norm", "--family", "depolarizing", "--d", "2", "--lambda", "0.5", "--nu", "--t", "2",
            "--restarts", "4",
        ],
        dir.path(),
        &[],
    );
    assert_eq!(out.status.code(), Some(0));
    let doc = stdout_json(&out);
    let value = doc["result"]["value"].as_f64().unwrap();
    assert!((value - 0.790569).abs() < 1e-5, "value {value}");
    assert_eq!(doc["result"]["converged"], serde_json::json!(true));
    // Fully-resolved config is echoed.
    assert_eq!(doc["config"]["optimizer"]["restarts"], serde_json::json!(4));
    assert_eq!(doc["config"]["optimizer"]["max_iters"], serde_json::json!(500));
}

#[test]
fn norm_identity_two_two_is_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = schatten(
        &[
            "norm", "--family", "identity", "--d", "2", "--p", "2", "--q", "2", "--restarts", "2",
        ],
        dir.path(),
        &[],
    );
    assert_eq!(out.status.code(), Some(0));
    let doc = stdout_json(&out);
    let value = doc["result"]["value"].as_f64().unwrap();
    assert!((value - 1.0).abs() < 1e-10, "value {value}");
}

#[test]
fn norm_from_channel_file() {
    let dir = tempfile::tempdir().unwrap();
    let chan = schatten::channel::ChannelMap::depolarizing(2, 0.3).unwrap();
    let path = dir.path().join("chan.json");
    std::fs::write(&path, chan.to_json(None)).unwrap();

    let out = schatten(
        &[
            "norm", "--file", "chan.json", "--p", "2", "--q", "4", "--restarts", "4",
        ],
        dir.path(),
        &[],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = stdout_json(&out);
    assert!(doc["result"]["value"].as_f64().unwrap() > 0.0);
    assert!(doc["result"]["converged"].is_boolean());
}

#[test]
fn malformed_spec_names_the_field_and_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = schatten(
        &["norm", "--family", "depolarizing", "--d", "2", "--p", "2", "--q", "2"],
        dir.path(),
        &[],
    );
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("lambda"), "stderr: {stderr}");

    let out = schatten(
        &["norm", "--family", "no-such-family", "--p", "2", "--q", "2"],
        dir.path(),
        &[],
    );
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("family"), "stderr: {stderr}");

    let out = schatten(
        &["norm", "--family", "identity", "--d", "2", "--p", "0.5", "--q", "2"],
        dir.path(),
        &[],
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn nonconverged_run_exits_two_with_value() {
    let dir = tempfile::tempdir().unwrap();
    let out = schatten(
        &[
            "norm", "--family", "random-cp", "--n", "2", "--m", "2", "--kraus", "3", "--p", "1.5",
            "--q", "3", "--restarts", "1", "--max-iters", "1", "--seed", "5",
        ],
        dir.path(),
        &[],
    );
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = stdout_json(&out);
    assert_eq!(doc["result"]["converged"], serde_json::json!(false));
    assert!(doc["result"]["value"].as_f64().unwrap() > 0.0);
}

#[test]
fn check_reports_cp_witness() {
    let dir = tempfile::tempdir().unwrap();
    let out = schatten(
        &[
            "check", "--family", "depolarizing", "--d", "2", "--lambda", "-0.4", "--samples", "50",
        ],
        dir.path(),
        &[],
    );
    assert_eq!(out.status.code(), Some(0));
    let doc = stdout_json(&out);
    assert_eq!(doc["result"]["cp"]["holds"], serde_json::json!(false));
    let min = doc["result"]["cp"]["min_eigenvalue"].as_f64().unwrap();
    assert!((min + 0.1).abs() < 1e-9, "min eigenvalue {min}");
    assert_eq!(doc["result"]["trace_preserving"], serde_json::json!(true));
}

#[test]
fn check_qubit_diagonal_canonical_criterion() {
    let dir = tempfile::tempdir().unwrap();
    let out = schatten(
        &[
            "check", "--family", "qubit-diag", "--lambda", "0.5,0.3,0.2", "--shift", "0.1,0,0.3",
            "--samples", "50",
        ],
        dir.path(),
        &[],
    );
    assert_eq!(out.status.code(), Some(0));
    let doc = stdout_json(&out);
    assert_eq!(doc["result"]["ep"]["holds"], serde_json::json!(true));
    assert_eq!(doc["result"]["ep_canonical_diagonal"], serde_json::json!(true));
}

#[test]
fn check_werner_holevo_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = schatten(
        &["check", "--family", "werner-holevo", "--d", "3", "--samples", "50"],
        dir.path(),
        &[],
    );
    assert_eq!(out.status.code(), Some(0));
    let doc = stdout_json(&out);
    assert_eq!(doc["result"]["cp"]["holds"], serde_json::json!(true));
    assert_eq!(doc["result"]["ep"]["holds"], serde_json::json!(false));
}

#[test]
fn verify_wh_reports_violation_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = schatten(
        &["verify", "--wh", "--d", "3", "--t", "5", "--out-jsonl", "wh.jsonl"],
        dir.path(),
        &[],
    );
    assert_eq!(out.status.code(), Some(0));
    let doc = stdout_json(&out);
    assert_eq!(
        doc["result"]["reports"][0]["violated"],
        serde_json::json!(true)
    );
    let lines = std::fs::read_to_string(dir.path().join("wh.jsonl")).unwrap();
    assert_eq!(lines.lines().count(), 1);
}

#[test]
fn verify_empty_suite_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = schatten(
        &[
            "verify", "--theorem", "2", "--cases", "0", "--out-jsonl", "r.jsonl", "--out-csv",
            "s.csv",
        ],
        dir.path(),
        &[],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(std::fs::read_to_string(dir.path().join("r.jsonl")).unwrap(), "");
    let doc = stdout_json(&out);
    assert_eq!(doc["result"]["summary"]["total"], serde_json::json!(0));
}

#[test]
fn verify_suite_outputs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut artifacts: Vec<(Vec<u8>, Vec<u8>, Vec<u8>)> = Vec::new();
    for _ in 0..2 {
        let out = schatten(
            &[
                "verify", "--theorem", "2", "--cases", "2", "--t", "2", "--seed", "7",
                "--restarts", "4", "--out-jsonl", "run.jsonl", "--out-csv", "run.csv",
            ],
            dir.path(),
            &[],
        );
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        artifacts.push((
            std::fs::read(dir.path().join("run.jsonl")).unwrap(),
            std::fs::read(dir.path().join("run.csv")).unwrap(),
            out.stdout,
        ));
    }
    assert_eq!(artifacts[0].0, artifacts[1].0, "report files differ");
    assert_eq!(artifacts[0].1, artifacts[1].1, "summary files differ");
    assert_eq!(artifacts[0].2, artifacts[1].2, "stdout differs");
    assert!(!artifacts[0].0.is_empty());
}

#[test]
fn verify_io_failure_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = schatten(
        &[
            "verify", "--theorem", "2", "--cases", "0", "--out-jsonl",
            "missing-dir/r.jsonl",
        ],
        dir.path(),
        &[],
    );
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn env_overrides_fill_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let out = schatten(
        &[
            "norm", "--family", "identity", "--d", "2", "--p", "2", "--q", "2",
        ],
        dir.path(),
        &[("SCHATTEN_SEED", "9"), ("SCHATTEN_RESTARTS", "3")],
    );
    assert_eq!(out.status.code(), Some(0));
    let doc = stdout_json(&out);
    assert_eq!(doc["config"]["optimizer"]["seed"], serde_json::json!(9));
    assert_eq!(doc["config"]["optimizer"]["restarts"], serde_json::json!(3));

    // An explicit flag wins over the environment.
    let out = schatten(
        &[
            "norm", "--family", "identity", "--d", "2", "--p", "2", "--q", "2", "--seed", "4",
        ],
        dir.path(),
        &[("SCHATTEN_SEED", "9")],
    );
    let doc = stdout_json(&out);
    assert_eq!(doc["config"]["optimizer"]["seed"], serde_json::json!(4));
}

#[test]
fn help_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = schatten(&["--help"], dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0));
    let out = schatten(&["norm", "--help"], dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn pretty_values_come_from_the_machine_document() {
    // Every numeric printed by the pretty renderer must also be present in
    // the JSON rendering of the same run.
    let dir = tempfile::tempdir().unwrap();
    let args_base = [
        "norm", "--family", "depolarizing", "--d", "2", "--lambda", "0.5", "--nu", "--t", "2",
        "--restarts", "2",
    ];
    let mut json_args: Vec<&str> = args_base.to_vec();
    json_args.extend(["--format", "json"]);
    let mut pretty_args: Vec<&str> = args_base.to_vec();
    pretty_args.extend(["--format", "pretty"]);

    let json_out = schatten(&json_args, dir.path(), &[]);
    let pretty_out = schatten(&pretty_args, dir.path(), &[]);
    let json_text = String::from_utf8_lossy(&json_out.stdout).to_string();
    let pretty_text = String::from_utf8_lossy(&pretty_out.stdout);

    for line in pretty_text.lines() {
        let Some(value) = line.split_whitespace().last() else {
            continue;
        };
        if value.parse::<f64>().is_ok() && value != "pretty" {
            assert!(
                json_text.contains(value),
                "pretty-only numeric `{value}` missing from JSON output"
            );
        }
    }
}
