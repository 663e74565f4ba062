//! End-to-end tests of the `qkdsim` binary: exit codes, output files,
//! determinism across reruns and thread counts.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn qkdsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qkdsim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn tmpdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("qkdsim-cli-{tag}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn run_writes_all_result_files() {
    let dir = tmpdir("run");
    let out = qkdsim(&[
        "run",
        "--spec",
        "paper-high-bias",
        "--out",
        dir.to_str().unwrap(),
        "--slots",
        "1000000",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for f in ["summary.txt", "histogram.csv", "sweep.csv", "tv_matrix.csv"] {
        assert!(dir.join(f).exists(), "missing {f}");
    }
    let summary = read(&dir, "summary.txt");
    assert!(summary.contains("qber_full = "));
    assert!(summary.contains("optimal_width_ns = "));
    let sweep = read(&dir, "sweep.csv");
    assert_eq!(
        sweep.lines().next().unwrap(),
        "width_ns,start_bin,qber,sifted_bps,secure_bps"
    );
    assert_eq!(sweep.lines().count(), 10);
}

#[test]
fn zero_slots_exits_2_with_message() {
    let dir = tmpdir("zeroslots");
    let out = qkdsim(&[
        "run",
        "--spec",
        "paper-zero-bias",
        "--out",
        dir.to_str().unwrap(),
        "--slots",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("n_slots must be >= 1"), "stderr: {err}");
}

#[test]
fn malformed_spec_exits_2_with_line() {
    let dir = tmpdir("badspec");
    let spec = dir.join("bad.spec");
    fs::write(&spec, "[source]\nclock_rate = 4e8\nflux_capacitor = 1.21\n").unwrap();
    let out = qkdsim(&[
        "run",
        "--spec",
        spec.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3"), "stderr: {err}");
    assert!(err.contains("flux_capacitor"), "stderr: {err}");
}

#[test]
fn unreachable_calibration_exits_3() {
    let dir = tmpdir("cal3");
    // Dark counts alone cannot produce a 45% QBER.
    let spec = dir.join("dark-only.spec");
    fs::write(
        &spec,
        "name = dark-only\n[source]\nmean_photon_number = 0\n[protocol]\nn_slots = 200000\nseed = 5\n",
    )
    .unwrap();
    let out = qkdsim(&[
        "calibrate",
        "--spec",
        spec.to_str().unwrap(),
        "--target",
        "0.45",
        "--knob",
        "optical-error",
        "--out",
        dir.join("out.spec").to_str().unwrap(),
        "--slots",
        "200000",
        "--refine-slots",
        "200000",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unreachable"));
}

#[test]
fn calibrate_writes_spec_and_prints_trace() {
    let dir = tmpdir("cal");
    let out = qkdsim(&[
        "calibrate",
        "--spec",
        "paper-zero-bias",
        "--target",
        "0.02",
        "--knob",
        "optical-error",
        "--out",
        dir.join("cal.spec").to_str().unwrap(),
        "--slots",
        "400000",
        "--refine-slots",
        "400000",
        "--tolerance",
        "0.001",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("probe  1:"), "trace missing: {stdout}");
    assert!(stdout.contains("calibrated optical_error_prob"));
    let written = fs::read_to_string(dir.join("cal.spec")).unwrap();
    assert!(written.contains("optical_error_prob = "));
    // The written spec parses and carries the calibrated value.
    assert!(!written.contains("optical_error_prob = 6.103515625e-3"));
}

#[test]
fn reruns_and_thread_counts_are_byte_identical() {
    let d1 = tmpdir("det1");
    let d2 = tmpdir("det2");
    let d4 = tmpdir("det4");
    let base = [
        "run",
        "--spec",
        "paper-zero-bias",
        "--slots",
        "2000000",
        "--seed",
        "99",
    ];
    let mut args1: Vec<&str> = base.to_vec();
    args1.extend(["--out", d1.to_str().unwrap(), "--threads", "1"]);
    let mut args2: Vec<&str> = base.to_vec();
    args2.extend(["--out", d2.to_str().unwrap(), "--threads", "1"]);
    let mut args4: Vec<&str> = base.to_vec();
    args4.extend(["--out", d4.to_str().unwrap(), "--threads", "4"]);
    assert!(qkdsim(&args1).status.success());
    assert!(qkdsim(&args2).status.success());
    assert!(qkdsim(&args4).status.success());
    for f in ["summary.txt", "histogram.csv", "sweep.csv", "tv_matrix.csv"] {
        let a = read(&d1, f);
        assert_eq!(a, read(&d2, f), "rerun differs in {f}");
        assert_eq!(a, read(&d4, f), "thread count changes {f}");
    }
}

#[test]
fn compare_self_is_all_zero() {
    let dir = tmpdir("cmp");
    let out = qkdsim(&[
        "run",
        "--spec",
        "paper-high-bias",
        "--out",
        dir.to_str().unwrap(),
        "--slots",
        "1000000",
    ]);
    assert!(out.status.success());
    let cmp = qkdsim(&["compare", dir.to_str().unwrap(), dir.to_str().unwrap()]);
    assert!(cmp.status.success());
    let stdout = String::from_utf8_lossy(&cmp.stdout);
    assert!(
        stdout.contains("secure_full_delta_pct = 0.00000e0"),
        "{stdout}"
    );
    assert!(
        stdout.contains("qber_full_delta_pp = 0.00000e0"),
        "{stdout}"
    );
}

#[test]
fn compare_missing_run_exits_2() {
    let dir = tmpdir("cmpmiss");
    let out = qkdsim(&["compare", dir.to_str().unwrap(), dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn certify_reports_both_scenarios() {
    let closed = qkdsim(&["certify", "--spec", "paper-high-bias"]);
    assert!(closed.status.success());
    assert!(String::from_utf8_lossy(&closed.stdout).contains("closure = PASS"));

    let open = qkdsim(&["certify", "--spec", "paper-zero-bias", "--epsilon", "0.05"]);
    assert!(open.status.success());
    assert!(String::from_utf8_lossy(&open.stdout).contains("closure = FAIL"));
}

#[test]
fn env_seed_is_the_fallback() {
    let d1 = tmpdir("env1");
    let d2 = tmpdir("env2");
    // A spec without a seed line.
    let spec = d1.join("no-seed.spec");
    fs::write(&spec, "name = ns\n[protocol]\nn_slots = 500000\n").unwrap();
    let run = |dir: &Path, seed: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_qkdsim"))
            .args([
                "run",
                "--spec",
                spec.to_str().unwrap(),
                "--out",
                dir.to_str().unwrap(),
            ])
            .env("QKDSIM_SEED", seed)
            .output()
            .unwrap();
        assert!(out.status.success());
    };
    run(&d1, "1234");
    run(&d2, "1234");
    assert_eq!(read(&d1, "summary.txt"), read(&d2, "summary.txt"));
    assert!(read(&d1, "summary.txt").contains("seed = 1234"));
}
