//! Acceptance criteria at full size and stated tolerances. Each test prints a
//! single PASS/FAIL line, followed by the individual checks.

use rsp_core::validation::{run_criterion, Level};

fn criterion(id: u8) {
    let report = run_criterion(id, Level::Full).expect("criterion runs to completion");
    println!("{}", report.summary());
    for check in &report.checks {
        println!("  {check}");
    }
    assert!(report.passed(), "{}", report.summary());
}

#[test]
fn criterion_1_closed_forms_match_ode() {
    criterion(1);
}

#[test]
fn criterion_2_sme_ensembles_match_closed_forms() {
    criterion(2);
}

#[test]
fn criterion_3_linear_trajectories_match_open_loop() {
    criterion(3);
}

#[test]
fn criterion_4_crossing_times() {
    criterion(4);
}

#[test]
fn criterion_5_threshold_tables() {
    criterion(5);
}

#[test]
fn criterion_6_asymptotic_speedup() {
    criterion(6);
}

#[test]
fn criterion_7_reduction_web() {
    criterion(7);
}

#[test]
fn criterion_8_delay_perturbation() {
    criterion(8);
}

#[test]
fn criterion_9_determinism() {
    criterion(9);
}
