use std::path::Path;
use std::process::{Command, Output};

fn tightwalk(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tightwalk"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn read(path: impl AsRef<Path>) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn oracle_passes_at_n6() {
    let dir = tempfile::tempdir().unwrap();
    let out = tightwalk(&["oracle", "--n", "6", "--p", "0.3", "--beta", "0.5", "--out", "o"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(dir.path().join("o/oracle.csv"));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("N,check,max_deviation,tolerance,passed"));
    for line in lines {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells[4], "true", "{line}");
        assert!(cells[2].parse::<f64>().unwrap() < 1e-10);
    }
    assert!(dir.path().join("o/oracle.csv.json").exists());
}

#[test]
fn oracle_mismatch_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = tightwalk(&["oracle", "--n", "5", "--tolerance", "0"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("oracle mismatch"));
}

#[test]
fn ck_row_for_n2() {
    let dir = tempfile::tempdir().unwrap();
    let out = tightwalk(&["diagnose", "ck", "--n-list", "2", "--p", "0.3"], dir.path());
    assert!(out.status.success());
    let csv = read(dir.path().join("ck.csv"));
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "2");
    let v: f64 = row[1].parse().unwrap();
    assert!((v - 2f64.powf(1.5) * 0.09).abs() < 1e-15);
}

#[test]
fn bad_p_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.json"), "{\n  \"p\": 0.7\n}\n").unwrap();
    let out = tightwalk(&["sample", "--config", "c.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("c.json:2:"), "{msg}");
    assert!(msg.contains("`p`"), "{msg}");
    let out = tightwalk(&["sample", "--p", "0.7"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_json_is_line_anchored() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.json"), "{\n  \"p\": 0.3,\n  \"N\": [10,\n}\n").unwrap();
    let out = tightwalk(&["sample", "--config", "c.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("c.json:4:"));
}

#[test]
fn too_large_exact_request_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = tightwalk(&["diagnose", "c-of-a", "--n-max", "600"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("n_max"));
}

#[test]
fn reruns_are_byte_identical_across_workers() {
    let dir = tempfile::tempdir().unwrap();
    let args = |w: &'static str, out: &'static str| {
        vec!["diagnose", "tightness", "--n", "50,200", "--replicas", "300", "--seed", "11", "--gamma", "0.4", "--workers", w, "--out", out]
    };
    assert!(tightwalk(&args("1", "a"), dir.path()).status.success());
    assert!(tightwalk(&args("3", "b"), dir.path()).status.success());
    for f in ["tightness.csv", "tightness_modified.csv"] {
        assert_eq!(read(dir.path().join("a").join(f)), read(dir.path().join("b").join(f)));
    }
    let csv = read(dir.path().join("a/tightness.csv"));
    assert!(csv.starts_with("N,delta,gamma,exceedance,stderr\n"));
    assert!(!csv.contains('\r'));
}

#[test]
fn sidecar_reproduces_output() {
    let dir = tempfile::tempdir().unwrap();
    let run = tightwalk(
        &["ensemble", "--n", "40", "--replicas", "25", "--batch", "7", "--seed", "5", "--signed", "--out", "e"],
        dir.path(),
    );
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let first = read(dir.path().join("e/ensemble_N40.csv"));
    assert_eq!(first.lines().count(), 26);
    std::fs::rename(dir.path().join("e"), dir.path().join("e0")).unwrap();
    let rerun = tightwalk(&["ensemble", "--config", "e0/ensemble_N40.csv.json"], dir.path());
    assert!(rerun.status.success(), "{}", String::from_utf8_lossy(&rerun.stderr));
    assert_eq!(first, read(dir.path().join("e/ensemble_N40.csv")));
    assert_eq!(read(dir.path().join("e0/ensemble_N40.csv.json")), read(dir.path().join("e/ensemble_N40.csv.json")));
}

#[test]
fn binary_ensemble_size() {
    let dir = tempfile::tempdir().unwrap();
    let run = tightwalk(&["ensemble", "--n", "30", "--replicas", "10", "--format", "binary"], dir.path());
    assert!(run.status.success());
    let bytes = std::fs::read(dir.path().join("ensemble_N30.bin")).unwrap();
    assert_eq!(bytes.len(), 30 * 10 * 4);
    let side: serde_json::Value = serde_json::from_str(&read(dir.path().join("ensemble_N30.bin.json"))).unwrap();
    assert_eq!(side["sidecar"]["summary"]["N"], 30);
    assert_eq!(side["sidecar"]["summary"]["replicas"], 10);
}

#[test]
fn sample_prints_a_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = tightwalk(&["sample", "--n", "15", "--seed", "2"], dir.path());
    assert!(out.status.success());
    let line = String::from_utf8(out.stdout).unwrap();
    let vals: Vec<i64> = line.trim().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(vals.len(), 15);
    assert!(vals.iter().all(|&v| v >= 0));
    let csv = read(dir.path().join("sample_N15.csv"));
    assert_eq!(csv.lines().count(), 17);
}

#[test]
fn partition_and_lemma_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = tightwalk(&["partition", "--n", "50", "--beta", "0"], dir.path());
    assert!(out.status.success());
    let csv = read(dir.path().join("partition_N50.csv"));
    let last: Vec<&str> = csv.lines().last().unwrap().split(',').collect();
    assert_eq!(last[0], "50");
    let side: serde_json::Value = serde_json::from_str(&read(dir.path().join("partition_N50.csv.json"))).unwrap();
    assert!((side["sidecar"]["summary"]["Z_N"].as_f64().unwrap() - 1.0).abs() < 1e-12);

    let out = tightwalk(&["diagnose", "lemma", "--n-max", "20", "--a-grid", "0,0.5,1"], dir.path());
    assert!(out.status.success());
    assert_eq!(read(dir.path().join("lemma.csv")).lines().count(), 1 + 19 * 3);
    let out = tightwalk(&["diagnose", "c-of-a", "--mode", "mc", "--n-list", "10", "--a-grid", "0.5", "--samples", "2000"], dir.path());
    assert!(out.status.success());
    assert!(read(dir.path().join("c_of_a.csv")).starts_with("n,a,value,stderr\n"));
}
