//! Sampler fidelity against the quadrature CDFs, standard-error honesty of
//! the capacity estimator, and binned agreement with the product density.

use fading_product::capacity::{ecc_quadrature, SnrPoint};
use fading_product::distributions::{
    sample_alpha_mu, sample_kappa_mu, AlphaMuParams, KappaMuParams,
};
use fading_product::montecarlo::{chi2_histogram_test, ecc_estimate, ks_test, McConfig};
use fading_product::product::ProductModel;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const N: usize = 300_000;

/// Tabulated quadrature CDF, linear interpolation on a log grid.
fn interpolant(
    cdf: impl Fn(f64) -> f64,
    samples: &[f64],
    points: usize,
) -> impl Fn(f64) -> f64 {
    let (lo, hi) = samples
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &z| (lo.min(z), hi.max(z)));
    let lo = (lo * 0.999).max(1e-12).ln();
    let hi = (hi * 1.001).ln();
    let grid: Vec<(f64, f64)> = (0..points)
        .map(|i| {
            let lz = lo + (hi - lo) * i as f64 / (points - 1) as f64;
            (lz, cdf(lz.exp()))
        })
        .collect();
    move |z: f64| {
        let lz = z.ln();
        let i = grid.partition_point(|&(g, _)| g < lz).clamp(1, grid.len() - 1);
        let (g0, f0) = grid[i - 1];
        let (g1, f1) = grid[i];
        (f0 + (lz - g0) / (g1 - g0) * (f1 - f0)).clamp(0.0, 1.0)
    }
}

#[test]
fn kappa_mu_sampler_matches_quadrature_cdf() {
    for (i, &(kappa, mu)) in [(0.0, 1.0), (0.7, 0.5), (1.1, 1.2), (1.5, 2.3), (3.0, 1.0)]
        .iter()
        .enumerate()
    {
        let p = KappaMuParams::new(kappa, mu, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + i as u64);
        let xs = sample_kappa_mu(&p, &mut rng, N);
        let cdf = interpolant(|r| p.cdf_quadrature(r).unwrap(), &xs, 512);
        let report = ks_test(&xs, cdf).unwrap();
        assert!(
            report.ks_p_value > 0.01,
            "kappa-mu ({kappa}, {mu}): KS p {:.4}, D {:.2e}",
            report.ks_p_value,
            report.ks_statistic
        );
    }
}

#[test]
fn alpha_mu_sampler_matches_quadrature_cdf() {
    for (i, &(alpha, mu)) in [(1.0, 1.0), (2.0, 0.5), (4.0, 1.2), (6.0, 1.3), (10.0, 2.3)]
        .iter()
        .enumerate()
    {
        let p = AlphaMuParams::new(alpha, mu, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2000 + i as u64);
        let ys = sample_alpha_mu(&p, &mut rng, N);
        let cdf = interpolant(|r| p.cdf_quadrature(r).unwrap(), &ys, 512);
        let report = ks_test(&ys, cdf).unwrap();
        assert!(
            report.ks_p_value > 0.01,
            "alpha-mu ({alpha}, {mu}): KS p {:.4}, D {:.2e}",
            report.ks_p_value,
            report.ks_statistic
        );
    }
}

#[test]
fn product_histogram_matches_quadrature_density() {
    let model = ProductModel::new(
        KappaMuParams::new(1.1, 1.2, 1.0).unwrap(),
        AlphaMuParams::new(2.0, 1.3, 1.0).unwrap(),
    )
    .unwrap();
    let cfg = McConfig::default().with_samples(1_000_000).with_seed(31337);
    let samples = fading_product::montecarlo::sample_product(&model, &cfg).unwrap();
    let cdf = interpolant(|z| model.cdf_quadrature(z).unwrap(), &samples, 384);
    let chi2 = chi2_histogram_test(&samples, cfg.bins, cdf).unwrap();
    assert!(
        chi2.p_value > 0.01,
        "chi-square p {:.4} (statistic {:.1}, dof {})",
        chi2.p_value,
        chi2.statistic,
        chi2.degrees_of_freedom
    );
}

#[test]
fn ecc_estimator_standard_errors_are_honest() {
    let model = ProductModel::new(
        KappaMuParams::new(0.7, 1.1, 1.0).unwrap(),
        AlphaMuParams::new(2.0, 0.9, 1.0).unwrap(),
    )
    .unwrap();
    let point = SnrPoint::from_db(0.0, std::f64::consts::LN_2).unwrap();
    let truth = ecc_quadrature(&model, &point).unwrap();

    let mut covered = 0;
    for seed in 0..100 {
        let cfg = McConfig {
            n_samples: 20_000,
            seed: 50_000 + seed,
            ..McConfig::default()
        };
        let (est, se) = ecc_estimate(&model, point.gamma_bar, point.bandwidth, &cfg).unwrap();
        if (est - truth).abs() <= 2.0 * se {
            covered += 1;
        }
    }
    // two-sigma coverage is ~95%; demand at least 90/100
    assert!(covered >= 90, "only {covered}/100 runs covered the true value");
}
