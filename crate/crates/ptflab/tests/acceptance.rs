//! The acceptance gate: every check in `ptflab::verify` at full scale, one
//! test (and one pass/fail line) per criterion. `cargo test --test acceptance`
//! is the single command a release has to survive.

use ptflab::verify::{run_check, CheckReport, VerifyParams};

fn run(id: &str) -> CheckReport {
    let report = run_check(id, &VerifyParams::default()).expect("check errored");
    assert!(
        report.pass,
        "{} {} failed: {}\nmetrics: {:?}",
        report.id, report.name, report.detail, report.metrics
    );
    report
}

#[test]
fn c01_td_completeness() {
    let r = run("c01");
    assert!(r.metrics.contains_key("d2_estimate") && r.metrics.contains_key("d3_estimate"));
}

#[test]
fn c02_t2_completeness() {
    let r = run("c02");
    assert!(r.metrics["estimate"] >= 0.74);
}

#[test]
fn c03_constant_calibration() {
    let r = run("c03");
    for variant in ["t1", "td", "t2"] {
        assert!((r.metrics[&format!("{variant}_estimate")] - 0.5).abs() <= 0.01);
    }
}

#[test]
fn c04_soundness_spot_checks() {
    let r = run("c04");
    assert!(r.metrics["adversary_estimate"] <= r.metrics["adversary_bound"]);
    assert!(r.metrics["random_worst_estimate"] <= 0.55);
}

#[test]
fn c05_dictator_decoding() {
    run("c05");
}

#[test]
fn c06_ug_end_to_end() {
    let r = run("c06");
    assert!(r.metrics["eta0_agreement"] >= r.metrics["eta0_bound"]);
    assert!(r.metrics["eta25_agreement"] >= r.metrics["eta25_bound"]);
}

#[test]
fn c07_lc_reduction_folding() {
    let r = run("c07");
    assert!(r.metrics["max_fold_residual"] <= 1e-9);
}

#[test]
fn c08_folding_algebra() {
    let r = run("c08");
    assert_eq!(r.metrics["max_identity_residual"], 0.0);
}

#[test]
fn c09_discretization_coupling() {
    let r = run("c09");
    assert!(r.metrics["max_sign_disagreement"] <= 0.02);
}

#[test]
fn c10_berry_esseen() {
    run("c10");
}

#[test]
fn c11_carbery_wright() {
    let r = run("c11");
    assert!(r.metrics["max_excess"] <= 0.0);
}

#[test]
fn c12_btvar_bound() {
    let r = run("c12");
    assert!(r.metrics["min_slack"] >= 0.0);
}

#[test]
fn c13_solvers() {
    let r = run("c13");
    assert_eq!(r.metrics["xor_d1"], 0.75);
    assert_eq!(r.metrics["xor_d2"], 1.0);
}

#[test]
fn c14_determinism() {
    let r = run("c14");
    assert_eq!(r.metrics["first_bytes"], r.metrics["second_bytes"]);
}
