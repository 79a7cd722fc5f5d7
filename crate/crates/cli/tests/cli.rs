use std::path::Path;
use std::process::{Command, Output};

fn uag(out_dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uag"))
        .arg("--out-dir")
        .arg(out_dir)
        .args(args)
        .output()
        .expect("spawn uag")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn threshold_table_on_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let o = uag(dir.path(), &["solve-thresholds", "--k-min", "4", "--k-max", "13", "--which", "alpha2"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "which,k,root,lower_3dp,bracket_low,bracket_high,tolerance");
    assert_eq!(lines.len(), 11);
    assert!(lines[10].starts_with("alpha2,13,0.257"));
    for f in ["records.csv", "timings.csv", "summary.json", "manifest.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn replay_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let o = uag(&first, &["--seed", "11", "matching-exp", "--n", "150", "--k", "3", "--trials", "5", "--threads", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest = first.join("manifest.json");
    let second = dir.path().join("second");
    let r = uag(&second, &["--threads", "1", "replay", manifest.to_str().unwrap()]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    assert_eq!(std::fs::read(first.join("records.csv")).unwrap(), std::fs::read(second.join("records.csv")).unwrap());
    assert_eq!(stdout(&o), stdout(&r));
}

#[test]
fn tampered_records_fail_replay() {
    let dir = tempfile::tempdir().unwrap();
    assert!(uag(dir.path(), &["generate", "--n", "20", "--k", "2", "--trials", "2"]).status.success());
    std::fs::write(dir.path().join("records.csv"), "trial\n").unwrap();
    let other = tempfile::tempdir().unwrap();
    let r = uag(other.path(), &["replay", dir.path().join("manifest.json").to_str().unwrap()]);
    assert!(!r.status.success());
}

#[test]
fn operational_errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    assert!(!uag(dir.path(), &["matching-exp", "--n", "10", "--k", "2", "--trials", "0"]).status.success());
    assert!(!uag(dir.path(), &["matching-exp", "--n", "10"]).status.success());
    assert!(!uag(dir.path(), &["hamilton-exp", "--n", "10", "--stages", "10,0"]).status.success());
    assert!(!uag(dir.path(), &["replay", "/nonexistent/manifest.json"]).status.success());
    // invalid config must fail before anything is written
    assert!(!dir.path().join("records.csv").exists());
}

#[test]
fn unsuccessful_experiments_still_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = uag(dir.path(), &["hamilton-exp", "--n", "60", "--stages", "1", "--trials", "2"]);
    assert!(o.status.success());
    let summary: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["successes"], 0);
    assert_eq!(summary["records"], 2);
    assert_eq!(summary["schema_version"], 1);
}

#[test]
fn json_format_and_certificates() {
    let dir = tempfile::tempdir().unwrap();
    let certs = dir.path().join("certs.txt");
    let o = uag(
        dir.path(),
        &["--format", "json", "hamilton-exp", "--n", "16", "--trials", "3", "--emit-certificates", certs.to_str().unwrap()],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc["records"].as_array().unwrap().len(), 3);
    let certified = doc["records"].as_array().unwrap().iter().filter(|r| r["certified"] == true).count();
    assert!(certified > 0);
    for r in doc["records"].as_array().unwrap().iter().filter(|r| r["certified"] == true) {
        assert_eq!(r["exact_agrees"], true);
    }
    let text = std::fs::read_to_string(certs).unwrap();
    assert_eq!(text.lines().count(), certified);
    for line in text.lines() {
        let mut v: Vec<u32> = line.split_whitespace().map(|t| t.parse().unwrap()).collect();
        v.sort_unstable();
        assert_eq!(v, (1..=16).collect::<Vec<_>>());
    }
}

#[test]
fn sweep_writes_axis_column() {
    let dir = tempfile::tempdir().unwrap();
    let o = uag(dir.path(), &["sweep", "--param", "k", "--values", "1..3", "matching-exp", "--n", "40", "--k", "1", "--trials", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.starts_with("sweep_k,trial,n,k,"));
    assert_eq!(text.lines().count(), 1 + 3 * 2);
    let summary = std::fs::read_to_string(dir.path().join("sweep_summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 4);
}
