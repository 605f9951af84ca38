use std::path::Path;
use std::process::{Command, Output};

use rsp_core::io::{read_curve_csv, read_table_csv, CurveData};

fn rsp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rsp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn curve(args: &[&str]) -> CurveData {
    let out = rsp(args);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    read_curve_csv(out.stdout.as_slice()).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn constant_curve_reaches_its_closed_form_value() {
    let c = curve(&[
        "curve",
        "--scenario",
        "constant",
        "--alpha",
        "1",
        "--t-end",
        "5",
        "--points",
        "501",
    ]);
    assert_eq!(c.times.len(), 501);
    assert!(c.stderr.is_none());
    assert_eq!(*c.times.last().unwrap(), 5.0);
    assert!((c.values[500] - (1.0 - (-10f64).exp())).abs() < 1e-14);
}

#[test]
fn ideal_curve_starts_at_zero() {
    let c = curve(&["curve", "--scenario", "ideal", "--engine", "analytic"]);
    assert_eq!((c.times[0], c.values[0]), (0.0, 0.0));
}

#[test]
fn ode_engine_tracks_closed_form() {
    let args = [
        "--scenario",
        "calibrated",
        "--delta",
        "-0.2",
        "--t-end",
        "2",
        "--points",
        "21",
    ];
    let exact = curve(&[&["curve"], &args[..]].concat());
    let ode = curve(&[&["curve", "--engine", "ode", "--dt", "1e-3"], &args[..]].concat());
    for (a, b) in exact.values.iter().zip(&ode.values) {
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }
}

#[test]
fn linear_monte_carlo_matches_open_loop_eigenvalue() {
    let c = curve(&[
        "curve",
        "--scenario",
        "open-loop",
        "--engine",
        "linear-mc",
        "--n-traj",
        "100000",
        "--t-end",
        "1",
        "--points",
        "2",
        "--seed",
        "4",
    ]);
    let se = c.stderr.unwrap()[1];
    assert!(
        (c.values[1] - 0.921350).abs() < 3.0 * se,
        "{} ± {se}",
        c.values[1]
    );
}

#[test]
fn identical_runs_write_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let out = rsp(&[
            "ensemble",
            "--scenario",
            "eta-optimal",
            "--eta",
            "0.85",
            "--n-traj",
            "300",
            "--t-end",
            "1",
            "--points",
            "11",
            "--seed",
            "17",
            "--out",
            path_str(p),
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let bytes = std::fs::read(&a).unwrap();
    assert_eq!(bytes, std::fs::read(&b).unwrap());
    let c = read_curve_csv(bytes.as_slice()).unwrap();
    assert_eq!(c.times.len(), 11);
    assert!(c.stderr.is_some());
}

#[test]
fn tables_match_reference_entries_and_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("t1.csv");
    let out = rsp(&["tables", "--which", "1", "--out", path_str(&csv)]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("Constant FB strength"));
    assert!(!text.contains("benchmark convention"));
    let rows = read_table_csv(std::fs::File::open(&csv).unwrap()).unwrap();
    assert_eq!(rows.len(), 12);
    assert_eq!(rows[0].imperfection, "alpha");
    // Reference entries hold to within 2% (the acceptance tolerance).
    assert!((rows[0].lo.unwrap() - 0.956).abs() < 0.02 * 0.956);
    assert!((rows[0].hi.unwrap() - 1.189).abs() < 0.02 * 1.189);

    let out = rsp(&["tables", "--which", "2", "--out", path_str(&csv)]);
    assert!(out.status.success());
    let rows = read_table_csv(std::fs::File::open(&csv).unwrap()).unwrap();
    assert_eq!(rows[3].imperfection, "delta");
    assert!((rows[3].hi.unwrap() - 0.01412).abs() < 0.02 * 0.01412);
}

#[test]
fn alternate_benchmark_is_flagged_and_differs() {
    let lambda = rsp(&["tables", "--which", "1"]);
    let bloch = rsp(&["tables", "--which", "1", "--benchmark", "bloch"]);
    let bloch_text = String::from_utf8(bloch.stdout).unwrap();
    assert!(bloch_text.contains("benchmark convention: bloch"));
    assert_ne!(String::from_utf8(lambda.stdout).unwrap(), bloch_text);
}

#[test]
fn config_file_is_layered_under_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "scenario = \"constant\"\npoints = 3\nt-end = 2.0\n\n[constant]\nalpha = 0.5\n",
    )
    .unwrap();
    let from_file = curve(&["curve", "--config", path_str(&cfg)]);
    assert_eq!(from_file.times, vec![0.0, 1.0, 2.0]);
    assert!((from_file.values[2] - rsp_core::analytic::constant_x(1.0, 2.0, 0.5)).abs() < 1e-15);

    let overridden = curve(&["curve", "--config", path_str(&cfg), "--alpha", "1"]);
    assert!((overridden.values[2] - rsp_core::analytic::constant_x(1.0, 2.0, 1.0)).abs() < 1e-15);
}

#[test]
fn usage_errors_exit_with_two() {
    for args in [
        &["curve", "--eta", "1.5"][..],
        &["curve", "--scenario", "teleport"],
        &["curve", "--no-such-flag"],
        &["curve", "--scenario", "open-loop", "--engine", "ode"],
        &["curve", "--scenario", "local-optimal-delayed"],
        &["ensemble", "--engine", "analytic"],
        &["curve", "--config", "/nonexistent/run.toml"],
    ] {
        let out = rsp(args);
        assert_eq!(
            out.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn validate_reports_and_sets_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("log.csv");
    let ok = rsp(&[
        "validate",
        "--criterion",
        "7",
        "--criterion",
        "4",
        "--out",
        path_str(&log),
    ]);
    assert_eq!(ok.status.code(), Some(0));
    let text = String::from_utf8(ok.stdout).unwrap();
    assert!(text.contains("criterion 7 PASS"));
    assert!(text.contains("criterion 4 PASS"));
    let logged = std::fs::read_to_string(&log).unwrap();
    assert!(logged.starts_with("criterion,label,measured,expected,tolerance,passed\n"));
    assert_eq!(logged.lines().count(), 1 + 6 + 4);

    // The eps = 1e-12 speed-up stays below its target, so this criterion fails.
    let failing = rsp(&["validate", "--criterion", "6"]);
    assert_eq!(failing.status.code(), Some(1));
    assert!(String::from_utf8(failing.stdout)
        .unwrap()
        .contains("criterion 6 FAIL"));
}

#[test]
fn crossings_and_speedup_emit_csv() {
    let out = rsp(&["crossings"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("curve,reference,lo,hi,t\n"));
    assert_eq!(text.lines().count(), 6);

    let custom = rsp(&[
        "crossings",
        "--scenario",
        "constant",
        "--alpha",
        "1",
        "--lo",
        "0.1",
        "--hi",
        "2",
    ]);
    let text = String::from_utf8(custom.stdout).unwrap();
    let t: f64 = text
        .lines()
        .nth(1)
        .unwrap()
        .rsplit(',')
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!((t - 0.768).abs() < 2e-3);

    let out = rsp(&["speedup", "--eps", "1e-4,1e-8"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 3);
}
