use std::path::Path;
use std::process::{Command, Output};

fn lcongr(args: &[&str], cache: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_lcongr"));
    cmd.args(args).env_remove("LCONGR_CACHE_DIR");
    if let Some(dir) = cache {
        cmd.env("LCONGR_CACHE_DIR", dir);
    }
    cmd.output().expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn verify_tables_exits_zero() {
    let out = lcongr(&["verify-tables"], None);
    assert_eq!(out.status.code(), Some(0));
    let rows = json(&out);
    assert_eq!(rows.as_array().unwrap().len(), 27);
}

#[test]
fn congruence_1356d1() {
    let out = lcongr(&["congruence", "--curve", "1356d1", "--char", "7:3:chi(3)=z2"], None);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["match"], serde_json::json!(true));
    assert_eq!(v["twisted"], serde_json::json!("-z-1"));
}

#[test]
fn unknown_label_is_a_usage_error() {
    let out = lcongr(&["lvalue", "--curve", "9999z9"], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("label not in dataset"));
}

#[test]
fn sweep_limit_is_capped() {
    let out = lcongr(&["density", "--curve", "11a1", "--limit", "10000001"], None);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_dataset_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.jsonl");
    std::fs::write(&path, "{\"label\": \"x\", \"ainvs\": [0, 0, 0, 0, 0], \"conductor\": 1}\n").unwrap();
    let out = lcongr(&["--dataset", path.to_str().unwrap(), "lvalue", "--curve", "x"], None);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn warm_and_cold_cache_agree() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["twist", "--curve", "11a1", "--char", "13:3:chi(2)=z"];
    let cold = lcongr(&args, None);
    let first = lcongr(&args, Some(dir.path()));
    assert!(dir.path().join("11a1.an").exists());
    let warm = lcongr(&args, Some(dir.path()));
    assert_eq!(cold.status.code(), Some(0));
    assert_eq!(cold.stdout, first.stdout);
    assert_eq!(cold.stdout, warm.stdout);
}

#[test]
fn truncated_cache_is_rebuilt() {
    let dir = tempfile::tempdir().unwrap();
    let warm = lcongr(&["cache-warm", "--curve", "11a1", "--nmax", "400"], Some(dir.path()));
    assert_eq!(warm.status.code(), Some(0));
    let file = dir.path().join("11a1.an");
    let full = std::fs::read_to_string(&file).unwrap();
    std::fs::write(&file, &full[..full.len() / 3]).unwrap();

    let args = ["lvalue", "--curve", "11a1"];
    let out = lcongr(&args, Some(dir.path()));
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("corrupt cache"));
    assert_eq!(out.stdout, lcongr(&args, None).stdout);
    let rebuilt = std::fs::read_to_string(&file).unwrap();
    assert!(rebuilt.lines().last().unwrap().starts_with("#sha256 "));
}

#[test]
fn cache_warm_needs_a_directory() {
    let out = lcongr(&["cache-warm", "--curve", "11a1"], None);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn precision_is_range_checked() {
    let out = lcongr(&["--precision", "1e-3", "lvalue", "--curve", "11a1"], None);
    assert_eq!(out.status.code(), Some(2));
    let out = lcongr(&["--precision", "1e-10", "lvalue", "--curve", "11a1"], None);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn cache_flag_overrides_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = lcongr(&["--cache", dir.path().to_str().unwrap(), "cache-warm", "--curve", "11a1", "--nmax", "50"], None);
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("11a1.an").exists());
}
