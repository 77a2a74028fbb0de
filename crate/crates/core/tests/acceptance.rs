//! Full-scale acceptance suite: one test per criterion, one pass/fail line
//! each (run with `--nocapture` to see per-check margins).

use bpskrx_core::validation::{run_criterion, Suite, SuiteSettings};

const SEED: u64 = 20_240_601;

fn criterion(id: u8) {
    let settings = SuiteSettings::new(Suite::Full, SEED);
    let report = run_criterion(id, &settings).expect("criterion evaluates");
    for check in &report.checks {
        eprintln!("    {check}");
    }
    println!("{}", report.summary());
    let failures: Vec<String> = report.failures().map(ToString::to_string).collect();
    assert!(report.passed(), "criterion {id} failed:\n{}", failures.join("\n"));
}

#[test]
fn criterion_01_closed_form_baselines() {
    criterion(1);
}

#[test]
fn criterion_02_distribution_kernel() {
    criterion(2);
}

#[test]
fn criterion_03_ideal_ordering() {
    criterion(3);
}

#[test]
fn criterion_04_asymptotic_convergence() {
    criterion(4);
}

#[test]
fn criterion_05_copy_resolution_monotonicity() {
    criterion(5);
}

#[test]
fn criterion_06_efficiency_regime() {
    criterion(6);
}

#[test]
fn criterion_07_dark_count_saturation() {
    criterion(7);
}

#[test]
fn criterion_08_visibility_regime() {
    criterion(8);
}

#[test]
fn criterion_09_monte_carlo_equivalence() {
    criterion(9);
}

#[test]
fn criterion_10_appendix_consistency() {
    criterion(10);
}

#[test]
fn criterion_11_reduction_identities() {
    criterion(11);
}
