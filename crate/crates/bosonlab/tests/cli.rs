//! End-to-end runs of the `bosonlab` binary.

use std::path::Path;
use std::process::{Command, Output};

use bosonlab::config::{Command as Sub, ReductionDemo, RunConfig};
use serde_json::Value;

fn bosonlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bosonlab"))
        .args(args)
        .env_remove("BOSONLAB_THREADS")
        .output()
        .expect("binary runs")
}

fn small_collision_run(out: &Path, threads: &str) -> Output {
    bosonlab(&[
        "collision-ratio",
        "--modes",
        "16",
        "--photons",
        "2,3",
        "--reps",
        "2",
        "--circuits",
        "4",
        "--samples",
        "30",
        "--seed",
        "11",
        "--threads",
        threads,
        "--out",
        out.to_str().unwrap(),
    ])
}

#[test]
fn help_lists_every_subcommand() {
    let out = bosonlab(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for sub in [
        "collision-ratio",
        "birthday-bound",
        "balls-bins",
        "route-permutation",
        "reduction-demo",
        "degree-check",
        "loss-check",
        "gbs-check",
    ] {
        assert!(text.contains(sub), "--help is missing {sub}");
    }
}

#[test]
fn collision_ratio_csv_header_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    assert_eq!(small_collision_run(&a, "1").status.code(), Some(0));
    assert_eq!(small_collision_run(&b, "4").status.code(), Some(0));
    let first = std::fs::read(&a).unwrap();
    assert_eq!(first, std::fs::read(&b).unwrap(), "output depends on the thread count");
    let text = String::from_utf8(first).unwrap();
    assert_eq!(text.lines().next(), Some("ensemble,M,N,q,circuit,seed,cf_count,samples,ratio"));
    // 2 ensembles × 2 photon numbers × 4 circuits.
    assert_eq!(text.lines().count(), 1 + 16);
}

#[test]
fn reduction_demo_json_keys() {
    let out = bosonlab(&["reduction-demo", "--seed", "5"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    for key in ["extrapolated", "direct", "abs_error", "amplification", "degree"] {
        assert!(report.get(key).is_some(), "missing {key}");
    }
    assert_eq!(report["degree"], 24);
    assert!(report["abs_error"].as_f64().unwrap() < 1e-6);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(bosonlab(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(bosonlab(&["balls-bins", "--modes", "many"]).status.code(), Some(1));
    assert_eq!(bosonlab(&[]).status.code(), Some(1));
    assert_eq!(bosonlab(&["route-permutation", "--perm", "1,1,2,3"]).status.code(), Some(1));
    assert_eq!(bosonlab(&["gbs-check", "--format", "csv"]).status.code(), Some(1));
}

#[test]
fn failed_assertion_exits_two() {
    // Demanding exactness below double rounding of the extrapolation cannot pass.
    let out = bosonlab(&["reduction-demo", "--tolerance", "0", "--seed", "5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.json");
    let cfg = RunConfig {
        command: Sub::ReductionDemo(ReductionDemo {
            delta: 0.2,
            ..Default::default()
        }),
        seed: 9,
        out: None,
        format: None,
    };
    std::fs::write(&cfg_path, cfg.to_json().unwrap()).unwrap();
    let dump = dir.path().join("resolved.json");
    let out = bosonlab(&[
        "--config",
        cfg_path.to_str().unwrap(),
        "--dump-config",
        dump.to_str().unwrap(),
        "reduction-demo",
        "--q0",
        "1",
        "--seed",
        "10",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let resolved = RunConfig::load(&dump).unwrap();
    assert_eq!(resolved.seed, 10);
    let Sub::ReductionDemo(p) = &resolved.command else { panic!("wrong command") };
    assert_eq!(p.delta, 0.2);

    // Without a subcommand the file alone decides what runs.
    let out = bosonlab(&["--config", cfg_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["delta"], 0.2);
    assert_eq!(report["seed"], 9);
}

#[test]
fn route_permutation_reports_exact_residual() {
    let out = bosonlab(&["route-permutation", "--perm", "3,1,2,4,8,7,6,5"]);
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["residual"], 0.0);
    assert_eq!(report["switch_settings"].as_array().unwrap().len(), 6);
}
