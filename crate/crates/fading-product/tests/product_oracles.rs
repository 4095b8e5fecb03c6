//! Oracle tests for the product engines: the residue series against
//! independent quadrature, closed forms, and each other.

use approx::{assert_abs_diff_eq, assert_relative_eq};
use fading_product::distributions::{AlphaMuParams, KappaMuParams};
use fading_product::product::{
    kernel_integral_quadrature, kernel_integral_series, CompositeCase, ProductModel, SeriesConfig,
};
use fading_product::quadrature::integrate_positive_ln;
use fading_product::specfun::rational_approx;

/// Modified Bessel function of the second kind, order zero; independent
/// oracle for the double-Rayleigh closed form 4 z K0(2 z).  The power-series
/// form `K0 = -(ln(x/2) + gamma) I0(x) + sum_k H_k (x^2/4)^k / (k!)^2` loses
/// only a few digits to cancellation over the range exercised here.
fn bessel_k0(x: f64) -> f64 {
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    assert!(x > 0.0 && x <= 10.0);
    let u = x * x / 4.0;
    let mut i0 = 1.0f64;
    let mut term = 1.0f64;
    for k in 1..80 {
        term *= u / (k * k) as f64;
        i0 += term;
        if term < 1e-18 * i0 {
            break;
        }
    }
    let mut sum = 0.0f64;
    let mut term = 1.0f64;
    let mut h = 0.0f64;
    for k in 1..80 {
        term *= u / (k * k) as f64;
        h += 1.0 / k as f64;
        sum += term * h;
        if term * h < 1e-18 * sum.max(1.0) {
            break;
        }
    }
    -((x / 2.0).ln() + EULER_GAMMA) * i0 + sum
}

fn model(kappa: f64, mu1: f64, alpha2: f64, mu2: f64) -> ProductModel {
    let x = KappaMuParams::new(kappa, mu1, 1.0).unwrap();
    let y = AlphaMuParams::new(alpha2, mu2, 1.0).unwrap();
    ProductModel::new(x, y).unwrap()
}

#[test]
fn kernel_series_matches_quadrature_identity() {
    // p = q = 1 reference point
    let cfg = SeriesConfig::default();
    let e1 = rational_approx(1.0, 64).unwrap();
    let series = kernel_integral_series(0.5, 1.0, 1.2, 2.0, 1.3, &e1, &cfg).unwrap();
    let quad = kernel_integral_quadrature(0.5, 1.0, 1.2, 2.0, 1.3).unwrap();
    assert_relative_eq!(series.value, quad, max_relative = 1e-8);

    let series = kernel_integral_series(1.0, 1.0, 1.5, 2.0, 1.3, &e1, &cfg).unwrap();
    let quad = kernel_integral_quadrature(1.0, 1.0, 1.5, 2.0, 1.3).unwrap();
    assert!(series.value > 0.0);
    assert_relative_eq!(series.value, quad, max_relative = 1e-8);
}

#[test]
fn kernel_series_matches_quadrature_across_exponents() {
    let cfg = SeriesConfig::default();
    for &(alpha, mu_y) in &[
        (2.0, 0.9),
        (2.0, 2.7),
        (4.0, 1.3),
        (6.0, 0.9),
        (6.0, 1.3),
        (10.0, 2.7),
        (3.0, 1.1),
        (1.0, 1.7),
    ] {
        let exp = rational_approx(alpha / 2.0, 64).unwrap();
        for &(b1, b2) in &[(0.3, 0.8), (1.0, 1.0), (2.5, 1.4)] {
            for &s in &[0.7, 1.2, 2.6] {
                let series = match kernel_integral_series(b1, b2, s, alpha, mu_y, &exp, &cfg) {
                    Ok(r) => r,
                    Err(fading_product::Error::Pole { .. }) => continue,
                    Err(e) => panic!("kernel series failed at ({alpha},{mu_y},{b1},{b2},{s}): {e}"),
                };
                let quad = kernel_integral_quadrature(b1, b2, s, alpha, mu_y).unwrap();
                assert_relative_eq!(
                    series.value,
                    quad,
                    max_relative = 1e-8,
                );
                assert!(series.value > 0.0, "kernel integral must be positive");
            }
        }
    }
}

#[test]
fn kernel_reports_pole_for_integer_collisions() {
    // mu_y - (i+s)/rho integral: s = 1, mu_y = 1, alpha = 2 puts the gamma
    // argument at 0 exactly
    let cfg = SeriesConfig::default();
    let e1 = rational_approx(1.0, 64).unwrap();
    match kernel_integral_series(0.5, 1.0, 1.0, 2.0, 1.0, &e1, &cfg) {
        Err(fading_product::Error::Pole { .. }) => {}
        other => panic!("expected pole, got {other:?}"),
    }
}

#[test]
fn double_rayleigh_closed_form() {
    // kappa -> 0, mu1 = 1, alpha2 = 2, mu2 = 1: f_Z(z) = 4 z K0(2 z).
    // The series sits exactly on the gamma pole lattice and must take the
    // perturbation path; quadrature is pole-free.
    let m = model(0.0, 1.0, 2.0, 1.0);
    for &z in &[0.25, 0.5, 1.0, 2.0] {
        let expect = 4.0 * z * bessel_k0(2.0 * z);
        let quad = m.pdf_quadrature(z).unwrap();
        assert_relative_eq!(quad, expect, max_relative = 1e-8);
        let series = m.pdf_series(z).unwrap();
        assert!(series.perturbed, "double-Rayleigh must perturb");
        assert_relative_eq!(series.value, expect, max_relative = 1e-3);
    }
    // spot value from the quadrature engine
    assert_relative_eq!(
        m.pdf_quadrature(1.0).unwrap(),
        4.0 * bessel_k0(2.0),
        max_relative = 1e-8
    );
}

#[test]
fn double_rayleigh_richardson_tightens_the_nudge() {
    let x = KappaMuParams::new(0.0, 1.0, 1.0).unwrap();
    let y = AlphaMuParams::new(2.0, 1.0, 1.0).unwrap();
    let plain = ProductModel::new(x, y).unwrap();
    let richardson = ProductModel::with_config(
        x,
        y,
        SeriesConfig {
            richardson: true,
            ..SeriesConfig::default()
        },
    )
    .unwrap();
    for &z in &[0.5, 1.0, 2.0] {
        let expect = 4.0 * z * bessel_k0(2.0 * z);
        let e_plain = (plain.pdf_series(z).unwrap().value - expect).abs() / expect;
        let e_rich = (richardson.pdf_series(z).unwrap().value - expect).abs() / expect;
        assert!(
            e_rich < e_plain * 0.1,
            "richardson should cut the perturbation error: {e_rich} vs {e_plain} at z = {z}"
        );
    }
}

#[test]
fn series_matches_quadrature_on_smooth_points() {
    // representative interior points, no poles
    let m = model(1.1, 1.2, 2.0, 1.3);
    for &z in &[0.25, 0.5, 1.0, 2.0] {
        let s = m.pdf_series(z).unwrap();
        assert!(!s.perturbed);
        let q = m.pdf_quadrature(z).unwrap();
        assert_relative_eq!(s.value, q, max_relative = 1e-6);
    }

    let m = model(0.7, 1.1, 6.0, 0.9);
    for &z in &[0.25, 0.5, 1.0, 2.0, 4.0] {
        let s = m.pdf_series(z).unwrap();
        let q = m.pdf_quadrature(z).unwrap();
        assert_relative_eq!(s.value, q, max_relative = 1e-6);
    }
}

#[test]
fn cdf_series_matches_integrated_pdf() {
    let m = model(1.1, 1.2, 6.0, 1.3);
    for &z in &[0.5, 1.0, 2.0] {
        let cdf = m.cdf_series(z).unwrap();
        let via_pdf = integrate_positive_ln(
            |u| m.pdf_quadrature(u).map(|v| v.max(0.0).ln()).unwrap_or(f64::NEG_INFINITY),
            z,
            1e-9,
        )
        .unwrap()
        .value;
        assert_relative_eq!(cdf.value, via_pdf, max_relative = 1e-6);
    }
}

#[test]
fn cdf_limits_and_monotonicity() {
    let m = model(1.1, 1.2, 10.0, 2.7);
    let mut prev = 0.0;
    for &z in &[0.2, 0.4, 0.6, 0.8, 1.0, 1.3, 1.7, 2.2, 3.0] {
        let f = m.cdf_series(z).unwrap().value;
        assert!((0.0..=1.0 + 1e-9).contains(&f), "CDF out of range: {f}");
        assert!(f >= prev, "CDF must be nondecreasing");
        prev = f;
    }
    // large-z limit
    let m = model(0.7, 1.1, 2.0, 1.3);
    let f = m.cdf_series(50.0).unwrap();
    assert_abs_diff_eq!(f.value, 1.0, epsilon = 1e-4);
}

#[test]
fn pdf_normalizes() {
    let m = model(0.7, 1.1, 6.0, 0.9);
    // quadrature engine: tight tolerance
    let quad_norm = integrate_positive_ln(
        |z| m.pdf_quadrature(z).map(|v| v.max(0.0).ln()).unwrap_or(f64::NEG_INFINITY),
        f64::INFINITY,
        1e-9,
    )
    .unwrap()
    .value;
    assert_abs_diff_eq!(quad_norm, 1.0, epsilon = 1e-8);

    // series engine on a trapezoid over an adaptive z-grid
    let zs: Vec<f64> = (0..400).map(|i| 1e-3 + i as f64 * 0.02).collect();
    let fs: Vec<f64> = zs.iter().map(|&z| m.pdf_series(z).unwrap().value).collect();
    let mut series_norm = 0.0;
    for i in 1..zs.len() {
        series_norm += 0.5 * (fs[i] + fs[i - 1]) * (zs[i] - zs[i - 1]);
    }
    assert_abs_diff_eq!(series_norm, 1.0, epsilon = 1e-4);
}

#[test]
fn pdf_vanishes_at_origin_when_lead_exponent_positive() {
    // leading power of z is min(2 mu_x, alpha_eff mu_y) - 1 > 0
    let m = model(1.1, 1.2, 2.0, 1.3); // min(2.4, 2.6) - 1 = 1.4
    let tiny = m.pdf_series(1e-6).unwrap().value;
    assert!(tiny < 1e-4, "density should vanish at the origin, got {tiny}");
    let smaller = m.pdf_series(1e-8).unwrap().value;
    assert!(smaller < tiny);
}

#[test]
fn scaling_covariance_of_the_quadrature_engine() {
    // scaling r_hat_x by c scales Z by c
    let base = model(1.1, 1.2, 6.0, 1.3);
    let c = 1.7;
    let x_scaled = KappaMuParams::new(1.1, 1.2, c).unwrap();
    let scaled = ProductModel::new(x_scaled, base.y).unwrap();
    for &z in &[0.5, 1.0, 2.0] {
        let lhs = scaled.pdf_quadrature(z).unwrap();
        let rhs = base.pdf_quadrature(z / c).unwrap() / c;
        assert_relative_eq!(lhs, rhs, max_relative = 1e-10);
    }
}

#[test]
fn moments_closed_form_vs_quadrature() {
    let m = model(0.7, 1.1, 6.0, 1.3);
    assert_relative_eq!(
        m.moment(2.0).unwrap(),
        m.moment_quadrature(2.0).unwrap(),
        max_relative = 1e-7
    );
    assert_relative_eq!(
        m.moment(1.0).unwrap(),
        m.moment_quadrature(1.0).unwrap(),
        max_relative = 1e-7
    );
}

#[test]
fn special_cases_have_unit_mean_multipath_factor() {
    let y = AlphaMuParams::new(2.0, 1.0, 1.0).unwrap();

    let m = ProductModel::special_case(CompositeCase::RayleighAlphaMu, y).unwrap();
    assert_eq!(m.x.kappa, 0.0);
    assert_eq!(m.x.mu, 1.0);
    assert_relative_eq!(m.x.envelope_moment(1.0).unwrap(), 1.0, max_relative = 1e-10);

    let m = ProductModel::special_case(CompositeCase::NakagamiAlphaMu { m: 2.0 }, y).unwrap();
    assert_eq!(m.x.kappa, 0.0);
    assert_eq!(m.x.mu, 2.0);
    assert_relative_eq!(m.x.envelope_moment(1.0).unwrap(), 1.0, max_relative = 1e-10);

    let m = ProductModel::special_case(CompositeCase::RiceAlphaMu { k: 3.0 }, y).unwrap();
    assert_eq!(m.x.kappa, 3.0);
    assert_eq!(m.x.mu, 1.0);
    // quadrature mean check
    let mean = fading_product::quadrature::integrate_positive_ln(
        |r| m.x.ln_envelope_pdf(r) + r.ln(),
        f64::INFINITY,
        1e-11,
    )
    .unwrap()
    .value;
    assert_relative_eq!(mean, 1.0, max_relative = 1e-6);

    let m = ProductModel::special_case(CompositeCase::OneSidedGaussianAlphaMu, y).unwrap();
    assert_eq!(m.x.mu, 0.5);
    assert!(ProductModel::special_case(CompositeCase::RiceAlphaMu { k: -1.0 }, y).is_err());
    assert!(ProductModel::special_case(CompositeCase::NakagamiAlphaMu { m: 0.0 }, y).is_err());
}

#[test]
fn coefficients_expose_finite_combined_prefactor_at_kappa_zero() {
    let m = model(0.0, 2.0, 2.0, 1.3);
    let c = m.coefficients(1.0, 0).unwrap();
    assert!(c.a1.is_infinite(), "raw A1 diverges at kappa = 0, mu > 1");
    assert_eq!(c.a3, 0.0, "raw A3 vanishes at kappa = 0, mu > 1");
    assert!(c.a1_a3.is_finite() && c.a1_a3 > 0.0);
    assert!(c.b1 > 0.0 && c.b2 > 0.0);

    // combined value: 2 mu^mu (1+kappa)^mu e^{-kappa mu} (z/rhat)^{mu-1}
    assert_relative_eq!(c.a1_a3, 2.0 * 4.0, max_relative = 1e-12);

    // at kappa > 0 the split and combined forms agree
    let m = model(1.1, 1.2, 2.0, 1.3);
    let c = m.coefficients(0.8, 2).unwrap();
    assert_relative_eq!(c.a1 * c.a3, c.a1_a3, max_relative = 1e-10);
    assert!(c.phi_k.is_finite());
    assert_relative_eq!(c.m1 * 0.8f64.powf(m.x.mu), c.a2, max_relative = 1e-12);
}

#[test]
fn parity_decrement_changes_the_represented_exponent() {
    let x = KappaMuParams::new(0.7, 1.1, 1.0).unwrap();
    let y = AlphaMuParams::new(4.0, 0.9, 1.0).unwrap();
    let standard = ProductModel::new(x, y).unwrap();
    assert_eq!((standard.exponent.p, standard.exponent.q), (2, 1));

    let compat = ProductModel::with_parity_decrement(x, y, SeriesConfig::default()).unwrap();
    assert_eq!((compat.exponent.p, compat.exponent.q), (1, 1));

    // the standard model tracks the alpha_y = 4 quadrature oracle...
    let q4 = standard.pdf_quadrature(1.0).unwrap();
    let s4 = standard.pdf_series(1.0).unwrap().value;
    assert_relative_eq!(s4, q4, max_relative = 1e-6);

    // ...while the decremented one evaluates an alpha_y = 2 model instead
    let y2 = AlphaMuParams::new(2.0, 0.9, 1.0).unwrap();
    let alpha2 = ProductModel::new(x, y2).unwrap();
    let q2 = alpha2.pdf_quadrature(1.0).unwrap();
    let s_compat = compat.pdf_series(1.0).unwrap().value;
    assert_relative_eq!(s_compat, q2, max_relative = 1e-6);
    assert!((s_compat - q4).abs() / q4 > 0.01);
}
