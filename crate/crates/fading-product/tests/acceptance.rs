//! Acceptance suite: one test per validation criterion, each printing its
//! pass/fail line and supporting detail.
//!
//! Run with `cargo test --test acceptance -- --nocapture --test-threads 1`
//! for a readable sequential report; the criteria are independent and also
//! pass when run concurrently.

use fading_product::validate::{
    criterion_determinism, criterion_double_rayleigh, criterion_ecc_agreement,
    criterion_figure_shapes, criterion_jensen_bound, criterion_normalization,
    criterion_oracle_triangle, CriterionOutcome, ValidationReport,
};
use std::time::Instant;

const SEED: u64 = 0xC0FFEE;

fn report(outcome: &CriterionOutcome, elapsed_s: f64, budget_s: Option<f64>) {
    let status = if outcome.passed { "PASS" } else { "FAIL" };
    println!(
        "{status} criterion {}: {} [{elapsed_s:.1}s]",
        outcome.index, outcome.name
    );
    for d in &outcome.details {
        println!("    {d}");
    }
    if let Some(b) = budget_s {
        assert!(
            elapsed_s < b,
            "criterion {} exceeded its runtime budget: {elapsed_s:.1}s >= {b}s",
            outcome.index
        );
    }
    assert!(outcome.passed, "criterion {} failed", outcome.index);
}

#[test]
fn criterion_1_oracle_triangle() {
    let t = Instant::now();
    let outcome = criterion_oracle_triangle(SEED, false);
    report(&outcome, t.elapsed().as_secs_f64(), Some(600.0));
}

#[test]
fn criterion_2_double_rayleigh_closed_form() {
    let t = Instant::now();
    let outcome = criterion_double_rayleigh();
    report(&outcome, t.elapsed().as_secs_f64(), None);
}

#[test]
fn criterion_3_normalization_and_consistency() {
    let t = Instant::now();
    let outcome = criterion_normalization(false);
    report(&outcome, t.elapsed().as_secs_f64(), None);
}

#[test]
fn criterion_4_capacity_method_agreement() {
    let t = Instant::now();
    let outcome = criterion_ecc_agreement(SEED, false);
    report(&outcome, t.elapsed().as_secs_f64(), Some(300.0));
}

#[test]
fn criterion_5_figure_level_reproduction() {
    let t = Instant::now();
    let outcome = criterion_figure_shapes();
    report(&outcome, t.elapsed().as_secs_f64(), None);
}

#[test]
fn criterion_6_jensen_bound() {
    let t = Instant::now();
    let outcome = criterion_jensen_bound();
    report(&outcome, t.elapsed().as_secs_f64(), None);
}

#[test]
fn criterion_7_determinism() {
    let t = Instant::now();
    let outcome = criterion_determinism(SEED);
    report(&outcome, t.elapsed().as_secs_f64(), None);

    // the rendered report must also be byte-stable: two sub-reports built
    // from fast criteria compare identically
    let build = || ValidationReport {
        seed: SEED,
        quick: true,
        criteria: vec![criterion_double_rayleigh(), criterion_determinism(SEED)],
    };
    let a = build().render();
    let b = build().render();
    assert_eq!(a, b, "rendered reports must be byte-identical");
}
