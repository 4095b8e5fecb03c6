//! Validate the analytic engines against the exact sampler: KS against the
//! series CDF, a chi-square histogram against the quadrature CDF, and an
//! empirical capacity estimate with its error bar.

use fading_product::distributions::{AlphaMuParams, KappaMuParams};
use fading_product::montecarlo::{chi2_histogram_test, ecc_estimate, ks_test, sample_product, McConfig};
use fading_product::product::ProductModel;

fn main() -> fading_product::Result<()> {
    let model = ProductModel::new(
        KappaMuParams::new(1.1, 1.2, 1.0)?,
        AlphaMuParams::new(2.0, 1.3, 1.0)?,
    )?;
    let cfg = McConfig::default().with_samples(200_000);
    let samples = sample_product(&model, &cfg)?;
    println!("drew {} product samples (seed {})", samples.len(), cfg.seed);

    // tabulate the series CDF once; evaluating it per sample would be wasteful
    let mut grid: Vec<(f64, f64)> = Vec::new();
    let (lo, hi) = samples
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &z| (lo.min(z), hi.max(z)));
    for i in 0..512 {
        let z = lo * 0.999 * ((hi * 1.001) / (lo * 0.999)).powf(i as f64 / 511.0);
        grid.push((z.ln(), model.cdf_series(z)?.value));
    }
    let cdf = |z: f64| {
        let lz = z.ln();
        let i = grid.partition_point(|&(g, _)| g < lz).clamp(1, grid.len() - 1);
        let (g0, f0) = grid[i - 1];
        let (g1, f1) = grid[i];
        (f0 + (lz - g0) / (g1 - g0) * (f1 - f0)).clamp(0.0, 1.0)
    };

    let ks = ks_test(&samples, cdf)?;
    println!(
        "KS vs series CDF: D = {:.5}, p = {:.4}, worst deviation near z = {:.3}",
        ks.ks_statistic, ks.ks_p_value, ks.max_deviation_location
    );

    let chi2 = chi2_histogram_test(&samples, cfg.bins, cdf)?;
    println!(
        "chi-square ({} bins): statistic {:.2}, p = {:.4}",
        cfg.bins, chi2.statistic, chi2.p_value
    );

    let (ecc, se) = ecc_estimate(&model, 1.0, std::f64::consts::LN_2, &cfg)?;
    let quad = fading_product::capacity::ecc_quadrature(
        &model,
        &fading_product::capacity::SnrPoint::from_linear(1.0, std::f64::consts::LN_2)?,
    )?;
    println!("capacity at 0 dB: MC {ecc:.6} +- {se:.1e}, quadrature {quad:.6}");
    Ok(())
}
