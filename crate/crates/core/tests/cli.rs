//! The `ufs` binary, run as a subprocess.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn ufs(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ufs"))
        .args(args)
        .current_dir(cwd)
        .env_remove("UFS_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn read_json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Generates the default synthetic set into `dir/data` and writes a config.
fn setup(extra: &str) -> TempDir {
    let dir = TempDir::new().unwrap();
    let out = ufs(&["gen-synth", "--out", "data"], dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let cfg = format!(
        r#"{{"dataset": "data/synth.csv", "label_column": "label", "k": 5, "epochs": 20{extra}}}"#
    );
    fs::write(dir.path().join("c.json"), cfg).unwrap();
    dir
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect()
}

#[test]
fn train_writes_params_and_report() {
    let dir = setup("");
    let out = ufs(&["train", "--config", "c.json", "--out", "run"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let run = dir.path().join("run");
    for f in [
        "params.json",
        "best_params.json",
        "report.jsonl",
        "split.json",
        "selection.json",
        "resolved_config.json",
    ] {
        assert!(run.join(f).exists(), "{f}");
    }
    let report = fs::read_to_string(run.join("report.jsonl")).unwrap();
    assert_eq!(report.lines().count(), 21);
    let resolved = read_json(run.join("resolved_config.json"));
    assert_eq!(resolved["sources"]["k"], "user");
    assert_eq!(resolved["sources"]["lr"], "default");
    assert_eq!(resolved["values"]["lr"], 0.001);
    let split = read_json(run.join("split.json"));
    for key in ["seed", "train", "val", "test"] {
        assert!(split.get(key).is_some());
    }
}

#[test]
fn unknown_config_key_exits_2_naming_it() {
    let dir = setup(r#", "lamda1": 0.5"#);
    let out = ufs(&["train", "--config", "c.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert_eq!(stderr.lines().count(), 1);
    let err: Value = serde_json::from_str(stderr.trim()).unwrap();
    assert_eq!(err["error"], "config");
    assert!(err["message"].as_str().unwrap().contains("lamda1"));
}

#[test]
fn runtime_failure_exits_1() {
    let dir = TempDir::new().unwrap();
    let out = ufs(&["train", "--data", "missing.csv", "--k", "2"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "runtime");
}

#[test]
fn missing_k_is_a_config_error() {
    let dir = setup("");
    fs::write(
        dir.path().join("nok.json"),
        r#"{"dataset": "data/synth.csv", "label_column": "label"}"#,
    )
    .unwrap();
    assert_eq!(
        ufs(&["train", "--config", "nok.json"], dir.path())
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn oracle_recovers_planted_columns() {
    let dir = setup("");
    let out = ufs(
        &["oracle", "--config", "c.json", "--k", "5", "--out", "o"],
        dir.path(),
    );
    assert!(out.status.success());
    let oracle = read_json(dir.path().join("o/oracle.json"));
    let planted = read_json(dir.path().join("data/planted.json"));
    assert_eq!(oracle["best_idx"], planted["planted"]);
}

#[test]
fn eval_reproduces_final_validation_loss() {
    let dir = setup("");
    assert!(
        ufs(&["train", "--config", "c.json", "--out", "run"], dir.path())
            .status
            .success()
    );
    let out = ufs(&["eval", "--config", "c.json", "--out", "run"], dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report = fs::read_to_string(dir.path().join("run/report.jsonl")).unwrap();
    let last: Value = serde_json::from_str(report.lines().last().unwrap()).unwrap();
    let losses = read_json(dir.path().join("run/losses.json"));
    let a = last["val"]["total"].as_f64().unwrap();
    let b = losses["val"]["total"].as_f64().unwrap();
    assert!((a - b).abs() <= 1e-10, "{a} vs {b}");
    let metrics = read_json(dir.path().join("run/metrics.json"));
    assert_eq!(metrics["dataset"], "synth");
    assert_eq!(metrics["k"], 5);
    assert_eq!(metrics["phi"], "square");
    assert!(metrics["recon_mse"].as_f64().unwrap() >= 0.0);
    let acc = metrics["accuracy"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&acc));
}

#[test]
fn select_reads_a_params_file() {
    let dir = setup("");
    assert!(
        ufs(&["train", "--config", "c.json", "--out", "run"], dir.path())
            .status
            .success()
    );
    let out = ufs(
        &[
            "select",
            "--params",
            "run/params.json",
            "--k",
            "3",
            "--out",
            "sel",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let sel = read_json(dir.path().join("sel/selection.json"));
    assert_eq!(sel["kept_idx"].as_array().unwrap().len(), 3);
}

#[test]
fn out_dir_env_var_overrides_config() {
    let dir = setup(r#", "out_dir": "from_config""#);
    let out = Command::new(env!("CARGO_BIN_EXE_ufs"))
        .args(["oracle", "--config", "c.json"])
        .current_dir(dir.path())
        .env("UFS_OUT_DIR", "from_env")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("from_env/oracle.json").exists());
    assert!(!dir.path().join("from_config").exists());
}

#[test]
fn sweep_commands_write_named_reports() {
    let dir = setup(
        r#", "n_values": [100, 200], "lambda_values": [0.0, 0.5], "k_values": [2, 3], "seeds": [0, 1], "deletions_per_n": 1, "sweep_seed": 4"#,
    );
    for (cmd, stem) in [
        ("sweep-n", "n_seed4"),
        ("sweep-lambda", "lambda1_seed4"),
        ("sweep-k", "k_seed4"),
        ("beta", "beta_seed4"),
        ("overlap", "overlap_seed0"),
    ] {
        let out = ufs(
            &[cmd, "--config", "c.json", "--out", "s", "--jobs", "2"],
            dir.path(),
        );
        assert!(
            out.status.success(),
            "{cmd}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        let csv = fs::read_to_string(dir.path().join(format!("s/{stem}.csv"))).unwrap();
        assert!(csv.starts_with("swept_value,error_diff,test_error,train_error"));
        assert!(dir.path().join(format!("s/{stem}.json")).exists());
    }
}

#[test]
fn repeated_runs_write_identical_bytes() {
    let dir = setup(r#", "n_values": [100, 200], "k_values": [2, 3]"#);
    for cmd in ["train", "sweep-k"] {
        let args = [cmd, "--config", "c.json", "--out", "d"];
        assert!(ufs(&args, dir.path()).status.success());
        let first = snapshot(&dir.path().join("d"));
        assert!(ufs(&args, dir.path()).status.success());
        assert_eq!(first, snapshot(&dir.path().join("d")), "{cmd}");
    }
    // thread count does not change results
    let one = ufs(
        &[
            "sweep-k", "--config", "c.json", "--out", "j1", "--jobs", "1",
        ],
        dir.path(),
    );
    let four = ufs(
        &[
            "sweep-k", "--config", "c.json", "--out", "j4", "--jobs", "4",
        ],
        dir.path(),
    );
    assert!(one.status.success() && four.status.success());
    assert_eq!(
        fs::read(dir.path().join("j1/k_seed0.csv")).unwrap(),
        fs::read(dir.path().join("j4/k_seed0.csv")).unwrap()
    );
}
