//! The building block behind the product series: the kernel integral
//!
//!   integral over t of t^{(a mu/2) - s - 1} exp(-b1/t - b2^{a/2} t^{a/2})
//!
//! evaluated both by its residue-series expansion (two finite sums of
//! gamma-weighted generalized hypergeometric values) and by direct adaptive
//! quadrature.

use fading_product::product::{kernel_integral_quadrature, kernel_integral_series, SeriesConfig};
use fading_product::specfun::rational_approx;

fn main() -> fading_product::Result<()> {
    let cfg = SeriesConfig::default();
    println!(
        "{:>7} {:>5} {:>5} {:>5} {:>22} {:>22} {:>10}",
        "alpha", "p/q", "b1", "s", "series", "quadrature", "rel diff"
    );
    for (alpha, mu_y) in [(2.0, 1.3), (3.0, 1.1), (4.0, 0.9), (6.0, 1.3), (10.0, 2.7)] {
        let exponent = rational_approx(alpha / 2.0, 64)?;
        for (b1, s) in [(0.5, 1.2), (1.5, 2.6)] {
            let b2 = 1.0;
            let series = kernel_integral_series(b1, b2, s, alpha, mu_y, &exponent, &cfg)?;
            let quad = kernel_integral_quadrature(b1, b2, s, alpha, mu_y)?;
            let rel = (series.value - quad).abs() / quad;
            println!(
                "{alpha:>7.1} {:>5} {b1:>5.1} {s:>5.1} {:>22.15e} {quad:>22.15e} {rel:>10.2e}",
                format!("{}/{}", exponent.p, exponent.q),
                series.value
            );
        }
    }
    Ok(())
}
