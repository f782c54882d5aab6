//! End-to-end checks of the command line binary: staged subcommands replay a
//! full run bit for bit, failures map to the documented exit codes, and the
//! self-check suites report through stdout.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_ttedopa");

const TINY_CFG: &str = "\
spectral.s = 1
spectral.kappa = 0.4
system.epsilon = 0.2
chain.n_modes = 8
chain.n_quad = 400
chain.m_pad = 16
evolve.dt = 0.1
evolve.t_final = 1
evolve.fock = 3
evolve.chi_max = 12
snapshots = 0.5 1
";

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("spawn binary")
}

fn write_tiny_cfg(dir: &Path) -> String {
    let path = dir.join("tiny.cfg");
    fs::write(&path, TINY_CFG).expect("write config");
    path.to_str().unwrap().to_owned()
}

#[test]
fn staged_replay_matches_full_run_bit_for_bit() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_tiny_cfg(tmp.path());
    let full = tmp.path().join("full");
    let out = run(&["run", "--config", &cfg, "--out", full.to_str().unwrap()]);
    assert!(out.status.success(), "run: {}", String::from_utf8_lossy(&out.stderr));

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(full.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "SUCCESS");
    assert!(manifest["files"]["spin.csv"].is_string());

    let staged = tmp.path().join("staged");
    for sub in ["evolve", "measure", "backmap", "analyze"] {
        let out = run(&[sub, "--config", &cfg, "--out", staged.to_str().unwrap()]);
        assert!(out.status.success(), "{sub}: {}", String::from_utf8_lossy(&out.stderr));
    }
    for name in [
        "coeffs.csv",
        "spin.csv",
        "chain_occ.csv",
        "bonds.csv",
        "ext_spectrum.csv",
        "corr.csv",
        "physical_spectrum.csv",
        "analysis_report.json",
        "checkpoint_t0.5.bin",
        "checkpoint_t1.bin",
    ] {
        let a = fs::read(full.join(name)).expect(name);
        let b = fs::read(staged.join(name)).expect(name);
        assert_eq!(a, b, "{name} differs between full run and staged replay");
    }
}

#[test]
fn failures_map_to_documented_exit_codes() {
    let tmp = TempDir::new().unwrap();

    // unreadable config
    let out = run(&["run", "--config", "/nonexistent.cfg"]);
    assert_eq!(out.status.code(), Some(2));

    // config rejected by validation
    let bad = tmp.path().join("bad.cfg");
    fs::write(&bad, "nonsense.key = 1\n").unwrap();
    let out = run(&["coeffs", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    // snapshot time off the step grid
    let cfg = write_tiny_cfg(tmp.path());
    let dir = tmp.path().join("offgrid");
    let out =
        run(&["evolve", "--config", &cfg, "--out", dir.to_str().unwrap(), "--snapshot", "0.55"]);
    assert_eq!(out.status.code(), Some(2));

    // checkpoints refuse a foreign config
    let dir = tmp.path().join("mismatch");
    let out = run(&["evolve", "--config", &cfg, "--out", dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let other = tmp.path().join("other.cfg");
    fs::write(&other, TINY_CFG.replace("epsilon = 0.2", "epsilon = 0.3")).unwrap();
    let out = run(&["measure", "--config", other.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("different config"), "stderr: {err}");
}

#[test]
fn validation_suite_reports_through_stdout() {
    let out = run(&["validate", "balance"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("PASS balance"), "stdout: {text}");
}

#[test]
fn desk_coefficients_match_closed_form() {
    // s = 2 at negligible temperature: mu0 = 2 alpha / (s + 1) = 1/6
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("coeffs");
    let out = run(&["coeffs", "--desk", "--out", dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.join("coeffs.csv")).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# s=2"));
    assert_eq!(lines.next().unwrap(), "k,omega_k,g_k");
    let row0: Vec<&str> = lines.next().unwrap().split(',').collect();
    let g0: f64 = row0[2].parse().unwrap();
    assert!((g0 - (1.0f64 / 6.0).sqrt()).abs() < 1e-6, "g0 = {g0}");
    assert_eq!(text.lines().count(), 62);
}
