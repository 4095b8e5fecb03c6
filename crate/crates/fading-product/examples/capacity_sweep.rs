//! Ergodic capacity over an average-SNR sweep, by all three routes.

use fading_product::capacity::{capacity_curve, EccMethod};
use fading_product::distributions::{AlphaMuParams, KappaMuParams};
use fading_product::montecarlo::McConfig;
use fading_product::product::ProductModel;

fn main() -> fading_product::Result<()> {
    let model = ProductModel::new(
        KappaMuParams::new(0.7, 1.1, 1.0)?,
        AlphaMuParams::new(2.0, 0.9, 1.0)?,
    )?;
    let grid: Vec<f64> = (0..7).map(|i| -10.0 + 5.0 * i as f64).collect();
    let bandwidth = std::f64::consts::LN_2; // capacity per unit bandwidth

    let quad = capacity_curve(&model, &grid, bandwidth, EccMethod::Quadrature, None)?;
    let series = capacity_curve(&model, &grid, bandwidth, EccMethod::Series, None)?;
    let mc_cfg = McConfig::default().with_samples(2_000_000);
    let mc = capacity_curve(&model, &grid, bandwidth, EccMethod::MonteCarlo, Some(&mc_cfg))?;

    println!(
        "{:>7} {:>14} {:>14} {:>14} {:>10}",
        "dB", "quadrature", "series", "monte carlo", "mc se"
    );
    for i in 0..grid.len() {
        println!(
            "{:>7.1} {:>14.8} {:>14.8} {:>14.8} {:>10.2e}",
            grid[i],
            quad.points[i].ecc.unwrap(),
            series.points[i].ecc.unwrap(),
            mc.points[i].ecc.unwrap(),
            mc.points[i].mc_standard_error.unwrap(),
        );
    }
    Ok(())
}
