//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! with its worst-case metrics. Run with `--nocapture` to see the lines.

use std::time::{Duration, Instant};

use lindblad_ep::verify::{run_check, Check, VerifyConfig};

fn criterion(check: Check, budget: Duration) {
    let start = Instant::now();
    let result = run_check(check, &VerifyConfig::default());
    let elapsed = start.elapsed();
    println!("{result}");
    println!(
        "    runtime {:.2} s (budget {} s)",
        elapsed.as_secs_f64(),
        budget.as_secs()
    );
    assert!(
        result.passed(),
        "criterion {} failed:\n{result}",
        check.id()
    );
}

#[test]
fn criterion_1_ep3_constants() {
    criterion(Check::Ep3, Duration::from_secs(1));
}

#[test]
fn criterion_2_ep2_curve_identity() {
    criterion(Check::Ep2Curve, Duration::from_secs(5));
}

#[test]
fn criterion_3_closed_form_against_dense_solver() {
    criterion(Check::Spectra, Duration::from_secs(10));
}

#[test]
fn criterion_4_lossless_limit() {
    criterion(Check::Lossless, Duration::from_secs(1));
}

#[test]
fn criterion_5_equilibrium() {
    criterion(Check::Equilibrium, Duration::from_secs(10));
}

#[test]
fn criterion_6_frame_equivalence() {
    criterion(Check::Frame, Duration::from_secs(10));
}

#[test]
fn criterion_7_conservation() {
    criterion(Check::Conservation, Duration::from_secs(10));
}

#[test]
fn criterion_8_splitting_exponents() {
    criterion(Check::Splitting, Duration::from_secs(5));
}

#[test]
fn criterion_9_phase_diagram_structure() {
    criterion(Check::PhaseDiagram, Duration::from_secs(30));
}
