//! One test per acceptance criterion. Each prints a single PASS/FAIL line.

use std::io::Write;
use std::sync::OnceLock;

use screenlab::checks::{self, Baseline, ExtensionData, Outcome};
use screenlab::cli::write_artifacts;
use screenlab::config::RunConfig;
use screenlab::exec::Execution;

fn baseline() -> &'static Baseline {
    static B: OnceLock<Baseline> = OnceLock::new();
    B.get_or_init(|| Baseline::build(Execution::default()).expect("reference sweeps"))
}

fn extensions() -> &'static ExtensionData {
    static E: OnceLock<ExtensionData> = OnceLock::new();
    E.get_or_init(|| ExtensionData::build(Execution::default()).expect("extension sweeps"))
}

// Written to the raw stream so passing lines survive output capture.
fn report(o: Outcome) {
    let _ = writeln!(std::io::stderr(), "{o}");
    assert!(o.passed, "criterion {} failed", o.id);
}

#[test]
fn criterion_01_principal_payoff_shape() {
    report(checks::criterion_1(baseline()));
}

#[test]
fn criterion_02_approval_and_agent_payoff() {
    report(checks::criterion_2(baseline()));
}

#[test]
fn criterion_03_screening_errors() {
    report(checks::criterion_3(baseline()));
}

#[test]
fn criterion_04_vanishing_noise_limit() {
    report(checks::criterion_4(baseline()));
}

#[test]
fn criterion_05_fixed_point_health() {
    report(checks::criterion_5(baseline(), Execution::default()));
}

#[test]
fn criterion_06_monte_carlo_concordance() {
    report(checks::criterion_6(baseline(), Execution::default()));
}

#[test]
fn criterion_07_accuracy_orderings() {
    report(checks::criterion_7(baseline()));
}

#[test]
fn criterion_08_commitment_benchmark() {
    report(checks::criterion_8(baseline()));
}

#[test]
fn criterion_09_extensions() {
    report(checks::criterion_9(extensions()));
}

#[test]
fn criterion_10_noise_properties() {
    report(checks::criterion_10());
}

#[test]
fn criterion_11_determinism() {
    let cfg = RunConfig::default();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = write_artifacts(&cfg, a.path(), Execution::Parallel).unwrap();
    let second = write_artifacts(&cfg, b.path(), Execution::Sequential).unwrap();
    report(checks::criterion_11(&first.csv, &second.csv));
}
