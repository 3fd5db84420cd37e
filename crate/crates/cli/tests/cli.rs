use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use amphisense::plant::{Scenario, Target};
use tempfile::TempDir;

fn bundled(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn amphisense(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_amphisense"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_writes_trace_metrics_and_summary() {
    let tmp = TempDir::new().unwrap();
    let scn = bundled("swim_pool.json");
    let out = amphisense(tmp.path(), &["run", path(&scn)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("PASS gait_frequency_hz"), "{stdout}");
    assert!(!stdout.contains("FAIL"));
    for f in ["swim_pool_trace.csv", "swim_pool_metrics.json", "swim_pool_summary.json"] {
        assert!(tmp.path().join(f).is_file(), "missing {f}");
    }
}

#[test]
fn failed_tolerance_exits_one() {
    let tmp = TempDir::new().unwrap();
    let mut s = Scenario::from_json(&fs::read_to_string(bundled("swim_pool.json")).unwrap()).unwrap();
    s.expect.gait_frequency_hz = Some(Target::new(1.5, 0.01));
    let p = tmp.path().join("bad.json");
    fs::write(&p, s.to_json()).unwrap();
    let out = amphisense(tmp.path(), &["run", path(&p)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL gait_frequency_hz"));
}

#[test]
fn malformed_input_is_an_error() {
    let tmp = TempDir::new().unwrap();
    let p = tmp.path().join("broken.json");
    fs::write(&p, "{ \"duration\": ").unwrap();
    for cmd in ["run", "calibrate", "bus-bench"] {
        let out = amphisense(tmp.path(), &[cmd, path(&p)]);
        assert_eq!(out.status.code(), Some(2), "{cmd}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    }
    let out = amphisense(tmp.path(), &["run", path(&tmp.path().join("missing.json"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bus_bench_reports_rates() {
    let tmp = TempDir::new().unwrap();
    let out = amphisense(tmp.path(), &["bus-bench", path(&bundled("line.json"))]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stats = fs::read_to_string(tmp.path().join("bus_stats.json")).unwrap();
    assert!(stats.contains("rate_hz"));
    assert!(tmp.path().join("bus_metrics.json").is_file());
}

#[test]
fn calibrate_writes_models() {
    let tmp = TempDir::new().unwrap();
    let out = amphisense(tmp.path(), &["calibrate", path(&bundled("jig.json"))]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let models = fs::read_dir(tmp.path().join("models")).unwrap().count();
    assert_eq!(models, 10);
    assert!(tmp.path().join("calibration_rmse.svg").is_file());
}

#[test]
fn analyze_and_plot_a_trace() {
    let tmp = TempDir::new().unwrap();
    let scn = bundled("swim_pool.json");
    assert!(amphisense(tmp.path(), &["run", path(&scn)]).status.success());
    let trace = tmp.path().join("swim_pool_trace.csv");

    let out = amphisense(tmp.path(), &["analyze", path(&trace), "--scenario", path(&scn)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(tmp.path().join("swim_pool_trace_analysis.json").is_file());

    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let spec = bundled("plotspec.json");
    assert!(amphisense(&a, &["plot", path(&trace), path(&spec)]).status.success());
    assert!(amphisense(&b, &["plot", path(&trace), path(&spec)]).status.success());
    let svg = fs::read(a.join("flux.svg")).unwrap();
    assert!(svg.starts_with(b"<svg"));
    assert_eq!(svg, fs::read(b.join("flux.svg")).unwrap());
}

#[test]
fn empty_trace_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let p = tmp.path().join("empty.csv");
    fs::write(&p, "t,mode,gt_j0\n").unwrap();
    let out = amphisense(tmp.path(), &["analyze", path(&p)]);
    assert_eq!(out.status.code(), Some(2));
    let out = amphisense(tmp.path(), &["plot", path(&p), path(&bundled("plotspec.json"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn seed_flag_changes_the_noise() {
    let tmp = TempDir::new().unwrap();
    let mut s = Scenario::from_json(&fs::read_to_string(bundled("swim_pool.json")).unwrap()).unwrap();
    s.duration = 8.0;
    s.expect = Default::default();
    let p = tmp.path().join("tiny.json");
    fs::write(&p, s.to_json()).unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert!(amphisense(&a, &["run", path(&p)]).status.success());
    assert!(amphisense(&b, &["--seed", "99", "run", path(&p)]).status.success());
    let ta = fs::read(a.join("swim_pool_trace.csv")).unwrap();
    let tb = fs::read(b.join("swim_pool_trace.csv")).unwrap();
    assert_ne!(ta, tb);
}
