use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use revcache::predictor::checkpoint::load_checkpoint;
use revcache::request_model::io::{read_catalog_json, read_trace_csv};
use revcache::sim::{prepare_workload, RunConfig};

fn revcache(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_revcache"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn error_line(out: &Output) -> serde_json::Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let line = stderr.lines().last().expect("an error line");
    serde_json::from_str(line).expect("machine-readable error")
}

fn small_config(dir: &Path) -> String {
    let mut cfg = RunConfig {
        users: 3,
        ..RunConfig::default()
    };
    cfg.workload.history_days = 6;
    cfg.workload.test_days = 2;
    cfg.predictor.fl.rounds = 2;
    cfg.predictor.hidden = vec![8];
    let path = dir.join("small.json");
    fs::write(&path, cfg.to_json().unwrap()).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn run_writes_the_result_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("out");
    let status = revcache(&[
        "run",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
        "--policy",
        "Proposed,LRU",
        "--cache-sizes",
        "12,60",
        "--seed",
        "5",
    ]);
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    let mut lines = summary.lines();
    assert_eq!(
        lines.next().unwrap(),
        "policy,n,cache_size,slots,mean_chr,chr_ci,mean_revenue,revenue_ci,mean_planned_revenue,mean_placements"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[0].starts_with("Proposed,5,12,"));
    assert!(rows[3].starts_with("LRU,5,60,"));
    assert!(out.join("slots.csv").exists());
    assert!(out.join("train_curve.csv").exists());
    let echo = RunConfig::load(&out.join("config.echo.json")).unwrap();
    assert_eq!(echo.seed, 5);
    assert_eq!(echo.cache_sizes, vec![12, 60]);
}

#[test]
fn trained_run_records_a_curve() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("trained");
    let status = revcache(&[
        "train",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let curve = fs::read_to_string(out.join("train_curve.csv")).unwrap();
    assert_eq!(curve.lines().count(), 3);
    assert!(curve.starts_with("round,mean_loss,val_acc_s0,"));
    let model = load_checkpoint(&out.join("model")).unwrap();
    assert_eq!(model.arch.hidden, vec![8]);
    assert!(model.is_finite());
}

#[test]
fn generate_round_trips_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = small_config(dir.path());
    let out = dir.path().join("gen");
    let status = revcache(&["generate", "--config", &cfg_path, "--out", out.to_str().unwrap()]);
    assert!(status.status.success());
    let cfg = RunConfig::load(Path::new(&cfg_path)).unwrap();
    let work = prepare_workload(&cfg).unwrap();
    let read = read_trace_csv(&out.join("trace.csv")).unwrap();
    assert!(read.requests == work.trace.requests, "requests differ after reading back");
    assert_eq!(read.partition, work.trace.partition);
    assert_eq!((read.seed, read.num_files, read.days), (work.trace.seed, work.trace.num_files, work.trace.days));
    assert_eq!(read_catalog_json(&out.join("catalog.json")).unwrap(), work.catalog);
}

#[test]
fn sweep_over_slot_lengths_merges_summaries() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("sweep");
    let status = revcache(&[
        "sweep",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
        "--cache-sizes",
        "60,12,24",
        "--slot-lens",
        "2,5",
    ]);
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 2 * 3 * 5);
    assert!(out.join("n2").join("slots.csv").exists());
    assert!(out.join("n5").join("slots.csv").exists());
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    let mut value: serde_json::Value = serde_json::from_str(&RunConfig::default().to_json().unwrap()).unwrap();
    value["cache_size"] = 10.into();
    fs::write(&path, value.to_string()).unwrap();
    let out = revcache(&["run", "--config", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(!out.status.success());
    let err = error_line(&out);
    assert_eq!(err["error"]["kind"], "config");
    assert!(err["error"]["message"].as_str().unwrap().contains("cache_size"));
}

#[test]
fn bad_arguments_fail_with_an_error_line() {
    let out = revcache(&["run", "--policy", "FIFO"]);
    assert!(!out.status.success());
    assert_eq!(error_line(&out)["error"]["kind"], "usage");

    let dir = tempfile::tempdir().unwrap();
    let out = revcache(&["run", "--cache-sizes", "7", "--out", dir.path().to_str().unwrap(), "--config", "/nonexistent.json"]);
    assert!(!out.status.success());
    assert_eq!(error_line(&out)["error"]["kind"], "io");
}

#[test]
fn shipped_configs_match_the_constructors() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    assert_eq!(RunConfig::load(&dir.join("desk.json")).unwrap(), RunConfig::default());
    for n in [2, 5] {
        let cfg = RunConfig::load(&dir.join(format!("paper_scale_n{n}.json"))).unwrap();
        assert_eq!(cfg, RunConfig::paper_scale(n));
    }
}
