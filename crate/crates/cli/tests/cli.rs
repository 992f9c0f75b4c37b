use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use dnls_cli::ExperimentConfig;
use serde_json::Value;
use tempfile::TempDir;

fn dnls(args: &[&str], dir: &Path, threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_dnls"));
    cmd.args(args).current_dir(dir);
    match threads {
        Some(t) => cmd.env("DNLS_THREADS", t),
        None => cmd.env_remove("DNLS_THREADS"),
    };
    cmd.output().unwrap()
}

fn run_config(dir: &TempDir, sub: &str, config: &str) -> (i32, String) {
    fs::write(dir.path().join("config.json"), config).unwrap();
    let out = dnls(&[sub, "--config", "config.json", "--out", "out"], dir.path(), None);
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn report(dir: &TempDir) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.path().join("out/report.json")).unwrap()).unwrap()
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(k).unwrap().to_string()).collect()
}

#[test]
fn conservative_simulate_keeps_charge() {
    let dir = TempDir::new().unwrap();
    let (code, _) = run_config(
        &dir,
        "simulate",
        r#"{"kind":"simulate","epsilon":1,"delta":0,"sigma":1,"m":100,"T":10,
            "initial_condition":{"type":"gaussian","width":2,"charge":2}}"#,
    );
    assert_eq!(code, 0);
    let csv = fs::read_to_string(dir.path().join("out/diagnostics.csv")).unwrap();
    assert!(csv.starts_with("t,charge,energy,l21_sq,tail_M,weighted_norm,J,Lambda\n"));
    let charge: Vec<f64> = column(&csv, "charge").iter().map(|c| c.parse().unwrap()).collect();
    assert_eq!(charge.len(), 101);
    for c in &charge {
        assert!((c / charge[0] - 1.0).abs() <= 1e-9);
    }
    assert!(column(&csv, "tail_M").iter().all(String::is_empty));
}

#[test]
fn config_echo_reloads_to_the_same_config() {
    let dir = TempDir::new().unwrap();
    let (code, _) = run_config(&dir, "simulate", r#"{"kind":"simulate","m":10,"T":0.5,"seed":9}"#);
    assert_eq!(code, 0);
    let echo = fs::read_to_string(dir.path().join("out/config_echo.json")).unwrap();
    let config = ExperimentConfig::from_json_str(&echo).unwrap();
    assert_eq!(config.dt, 0.01);
    assert_eq!(config.seed, 9);
    assert_eq!(config.to_json(), echo);
}

#[test]
fn seed_flag_overrides_config() {
    let dir = TempDir::new().unwrap();
    fs::write(
        dir.path().join("c.json"),
        r#"{"kind":"simulate","m":5,"T":0.1,"initial_condition":{"type":"random_sphere","radius":1}}"#,
    )
    .unwrap();
    let run = |seed: &str, out: &str| {
        let o = dnls(&["simulate", "--config", "c.json", "--seed", seed, "--out", out], dir.path(), None);
        assert!(o.status.success());
        fs::read_to_string(dir.path().join(out).join("diagnostics.csv")).unwrap()
    };
    assert_eq!(run("1", "a"), run("1", "b"));
    assert_ne!(run("1", "a"), run("2", "c"));
    let echo = fs::read_to_string(dir.path().join("c/config_echo.json")).unwrap();
    assert!(echo.contains("\"seed\": 2"));
}

#[test]
fn unknown_key_is_rejected_with_suggestion() {
    let dir = TempDir::new().unwrap();
    let (code, err) = run_config(&dir, "simulate", r#"{"kind":"simulate","epsilonn":1}"#);
    assert_eq!(code, 1);
    assert!(err.contains("did you mean \"epsilon\""), "{err}");
}

#[test]
fn parse_error_and_missing_file_exit_1() {
    let dir = TempDir::new().unwrap();
    assert_eq!(run_config(&dir, "simulate", "{").0, 1);
    let out = dnls(&["simulate", "--config", "missing.json"], dir.path(), None);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn subcommand_must_match_kind() {
    let dir = TempDir::new().unwrap();
    let (code, err) = run_config(&dir, "tail-audit", r#"{"kind":"simulate"}"#);
    assert_eq!(code, 1);
    assert!(err.contains("tail_audit"), "{err}");
}

#[test]
fn tail_audit_rejects_small_absorbing_radius() {
    let dir = TempDir::new().unwrap();
    let (code, err) = run_config(
        &dir,
        "tail-audit",
        r#"{"kind":"tail_audit","delta":0.5,"forcing":{"type":"uniform","norm":0.1,"support":10},
            "rho1":0.2,"eta":0.01,"M":[41]}"#,
    );
    assert_eq!(code, 1);
    assert!(err.contains("absorbing-ball"), "{err}");
}

#[test]
fn contraction_probe_report() {
    let dir = TempDir::new().unwrap();
    let (code, _) = run_config(
        &dir,
        "contraction-probe",
        r#"{"kind":"contraction_probe","R":0.5,"omega":1,"sigma":1,"m":20}"#,
    );
    assert_eq!(code, 0);
    let r = report(&dir);
    assert_eq!(r["status"], "passed");
    assert_eq!(r["report"]["lipschitz_bound"].as_f64(), Some(0.5));
    assert!(r["report"]["empirical_ratio_max"].as_f64().unwrap() <= 0.5);
}

#[test]
fn standing_wave_from_zero_is_trivial() {
    let dir = TempDir::new().unwrap();
    let (code, _) = run_config(
        &dir,
        "standing-wave",
        r#"{"kind":"standing_wave","m":10,"initial_condition":{"type":"zero"}}"#,
    );
    assert_eq!(code, 0);
    let r = report(&dir);
    assert_eq!(r["status"], "trivial");
    assert_eq!(r["report"]["outcome"], "trivial");
}

#[test]
fn standing_wave_continuation_by_default() {
    let dir = TempDir::new().unwrap();
    let (code, _) = run_config(&dir, "standing-wave", r#"{"kind":"standing_wave","m":20}"#);
    assert_eq!(code, 0);
    let r = report(&dir);
    assert_eq!(r["report"]["branch"]["complete"], true);
    assert!(r["report"]["final_residual"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn numerical_failure_exits_2_with_time() {
    let dir = TempDir::new().unwrap();
    let (code, _) = run_config(
        &dir,
        "simulate",
        r#"{"kind":"simulate","sigma":3,"m":5,"T":1,"dt":0.5,"max_inner_iters":3,
            "initial_condition":{"type":"single_site","amplitude":50}}"#,
    );
    assert_eq!(code, 2);
    let r = report(&dir);
    assert_eq!(r["status"], "numerical_error");
    assert_eq!(r["report"]["time"].as_f64(), Some(0.0));
}

#[test]
fn weak_damping_is_rejected() {
    let dir = TempDir::new().unwrap();
    let (code, err) = run_config(
        &dir,
        "weight-audit",
        r#"{"kind":"weight_audit","delta":0.3,"lambda":0.1,"eta":0.1,"M":[10]}"#,
    );
    assert_eq!(code, 1);
    assert!(err.contains("damping condition"), "{err}");
}

#[test]
fn snapshots_are_written_as_jsonl() {
    let dir = TempDir::new().unwrap();
    let (code, _) = run_config(
        &dir,
        "simulate",
        r#"{"kind":"simulate","m":3,"T":0.2,"snapshots":true,
            "initial_condition":{"type":"single_site","amplitude":1}}"#,
    );
    assert_eq!(code, 0);
    let text = fs::read_to_string(dir.path().join("out/snapshots.jsonl")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    let first: dnls_core::LatticeState = serde_json::from_str(lines[0]).unwrap();
    assert_eq!(first.half_width(), 3);
}

#[test]
fn initial_state_from_file() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("u0.json"), "[[0,0],[1,0],[0,0]]").unwrap();
    let (code, _) = run_config(
        &dir,
        "simulate",
        r#"{"kind":"simulate","m":4,"T":0.1,"initial_condition":{"type":"file","path":"u0.json"}}"#,
    );
    assert_eq!(code, 0);
    let csv = fs::read_to_string(dir.path().join("out/diagnostics.csv")).unwrap();
    let c0: f64 = column(&csv, "charge")[0].parse().unwrap();
    assert_eq!(c0, 1.0);
}

const DELTA_GRID: &str = r#"{"base":{"kind":"tail_audit","m":60,"T":10,"eta":0.5,"rho1":0.3,"M":[12],
    "forcing":{"type":"uniform","norm":0.01,"support":5},
    "initial_condition":{"type":"random_sphere","radius":1}},
  "axes":[{"field":"delta","values":[0.1,0.2,0.4]}]}"#;

#[test]
fn delta_sweep_bounds_decrease() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("grid.json"), DELTA_GRID).unwrap();
    let out = dnls(&["sweep", "--grid", "grid.json", "--out", "s"], dir.path(), None);
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("s/sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    let bounds: Vec<f64> = column(&csv, "bound").iter().map(|b| b.parse().unwrap()).collect();
    assert!(bounds.windows(2).all(|w| w[1] < w[0]), "{bounds:?}");
    assert!((bounds[0] - 2.0 * 0.5 / 0.1).abs() < 1e-12);
}

#[test]
fn sweep_is_reproducible_across_thread_counts() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("grid.json"), DELTA_GRID).unwrap();
    let csv = |out: &str, threads: Option<&str>| {
        let o = dnls(&["sweep", "--grid", "grid.json", "--seed", "5", "--out", out], dir.path(), threads);
        assert!(o.status.success());
        fs::read(dir.path().join(out).join("sweep.csv")).unwrap()
    };
    let a = csv("a", Some("1"));
    assert_eq!(a, csv("a", Some("4")));
    assert_eq!(a, csv("a", None));
    let report = || fs::read(dir.path().join("a/point_0001/report.json")).unwrap();
    let first = report();
    csv("a", Some("3"));
    assert_eq!(first, report());
}

#[test]
fn empty_grid_gives_header_only() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("grid.json"), r#"{"base":{"kind":"simulate"},"axes":[]}"#).unwrap();
    let out = dnls(&["sweep", "--grid", "grid.json", "--out", "s"], dir.path(), None);
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("s/sweep.csv")).unwrap();
    assert_eq!(csv, "index,seed,status,exit_code,error\n");
}

#[test]
fn failed_points_are_recorded_and_exit_2() {
    let dir = TempDir::new().unwrap();
    fs::write(
        dir.path().join("grid.json"),
        r#"{"base":{"kind":"simulate","m":5,"T":0.1},"axes":[{"field":"epsilon","values":[1,-1]}]}"#,
    )
    .unwrap();
    let out = dnls(&["sweep", "--grid", "grid.json", "--out", "s"], dir.path(), None);
    assert_eq!(out.status.code(), Some(2));
    let csv = fs::read_to_string(dir.path().join("s/sweep.csv")).unwrap();
    assert_eq!(column(&csv, "status"), vec!["passed", "invalid"]);
    assert!(column(&csv, "error")[1].contains("epsilon"));
}

#[test]
fn bad_thread_count_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("grid.json"), r#"{"base":{"kind":"simulate"},"axes":[]}"#).unwrap();
    let out = dnls(&["sweep", "--grid", "grid.json"], dir.path(), Some("zero"));
    assert_eq!(out.status.code(), Some(1));
}
