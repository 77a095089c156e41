//! End-to-end CLI tests: the documented exit codes and a full run over a
//! synthetic dataset.

use std::path::PathBuf;
use std::process::Command;

fn lsf() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lsf"))
}

fn temp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("lsf_cli_{name}_{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn help_exits_zero() {
    let out = lsf().arg("--help").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn unknown_flag_is_usage_error() {
    let out = lsf().args(["ingest", "--no-such-flag"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn train_without_seed_is_usage_error() {
    let out = lsf()
        .args(["train-lstm", "--data-dir", "/nonexistent", "--out-dir", "/nonexistent"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("--seed"), "{stderr}");
}

#[test]
fn missing_upstream_artifact_is_data_error() {
    let data = temp_dir("noart_data");
    let out_dir = temp_dir("noart_out");
    let out = lsf()
        .args([
            "evaluate",
            "--data-dir",
            data.to_str().unwrap(),
            "--out-dir",
            out_dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("run split first"), "{stderr}");
}

#[test]
fn missing_data_dir_is_data_error() {
    let out_dir = temp_dir("nodata_out");
    let out = lsf()
        .args([
            "ingest",
            "--data-dir",
            "/definitely/not/a/real/path",
            "--out-dir",
            out_dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn synth_then_full_pipeline_exits_zero() {
    let data = temp_dir("full_data");
    let out_dir = temp_dir("full_out");
    let out = lsf()
        .args([
            "synth",
            "--out-dir",
            data.to_str().unwrap(),
            "--train-records",
            "3",
            "--windows",
            "12",
            "--positive-fraction",
            "0.5",
            "--seed",
            "5",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let out = lsf()
        .args([
            "run-all",
            "--data-dir",
            data.to_str().unwrap(),
            "--out-dir",
            out_dir.to_str().unwrap(),
            "--seed",
            "5",
            "--hidden-size",
            "6",
            "--max-epochs",
            "3",
            "--batch-size",
            "16",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("report/report.md").exists());

    // Stage-by-stage rerun against existing artifacts also succeeds.
    let out = lsf()
        .args([
            "benchmark",
            "--data-dir",
            data.to_str().unwrap(),
            "--out-dir",
            out_dir.to_str().unwrap(),
            "--benchmark-segments",
            "120",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("bench/latency.txt").exists());
}

#[test]
fn config_file_drives_the_run() {
    let data = temp_dir("cfg_data");
    let out_dir = temp_dir("cfg_out");
    lsf()
        .args([
            "synth",
            "--out-dir",
            data.to_str().unwrap(),
            "--train-records",
            "3",
            "--windows",
            "12",
            "--positive-fraction",
            "0.5",
            "--seed",
            "3",
        ])
        .output()
        .unwrap();
    let cfg = temp_dir("cfg_file").join("run.cfg");
    std::fs::write(
        &cfg,
        format!(
            "data_dir = {}\nout_dir = {}\ntask = arrhythmia\nseed = 3\nhidden_size = 6\nmax_epochs = 2\nbatch_size = 16\n",
            data.display(),
            out_dir.display()
        ),
    )
    .unwrap();
    let out = lsf()
        .args(["run-all", "--config", cfg.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}
