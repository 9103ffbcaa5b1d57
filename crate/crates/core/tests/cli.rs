use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crb-waveform")).args(args).output().unwrap()
}

fn write_config(dir: &Path, json: &str) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, json).unwrap();
    path.to_str().unwrap().to_string()
}

const SMALL: &str = r#"{
    "scenario": {"n_tx": 4, "n_rx": 4, "subcarriers": 4, "symbols": 2, "paths": 2},
    "scenarios": 5,
    "sample_sizes": [2],
    "eval_draws": 4
}"#;

#[test]
fn unknown_key_exits_with_2_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), r#"{"scenario": {"n_tx": 4, "bogus_key": 1}}"#);
    let out = cli(&["robust", "--config", &config, "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus_key"));
}

#[test]
fn invalid_value_exits_with_2_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), r#"{"eval_draws": 0}"#);
    let out = cli(&["crlb-curves", "--config", &config, "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("eval_draws"));

    let out = cli(&["robust", "--config", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), r#"{"scenario": {"n_tx": 1, "n_rx": 1, "paths": 1, "subcarriers": 2, "symbols": 2}}"#);
    let out = cli(&["feasibility", "--config", &config, "--out-dir", dir.path().to_str().unwrap(), "--scenarios", "1"]);
    assert_eq!(out.status.code(), Some(3));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("scenario 0") && msg.contains("iteration 0"), "{msg}");
}

#[test]
fn reruns_are_byte_identical_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out_dir in [&a, &b] {
        let out = cli(&["robust", "--config", &config, "--seed", "5", "--scenarios", "2", "--out-dir", out_dir.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let read = |d: &Path| std::fs::read(d.join("robust_seed5.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    let text = String::from_utf8(read(&a)).unwrap();
    assert!(text.starts_with("scenario_id,design,sigma_e,mean_objective\n"));
    assert_eq!(text.lines().count(), 1 + 2 * 2 * 3);

    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(a.join("config_resolved.json")).unwrap()).unwrap();
    assert_eq!(json["config"]["seed"], 5);
    assert_eq!(json["config"]["scenarios"], 2);
}

#[test]
fn unknown_command_is_rejected() {
    let out = cli(&["histogram", "--config", "x.json"]);
    assert!(!out.status.success());
}
