//! Distribution functions across the shadowing-exponent ladder.
//!
//! Steeper non-linearity and more clusters concentrate the product around
//! its rms, so the CDF climbs to one faster along the ladder.

use fading_product::distributions::{AlphaMuParams, KappaMuParams};
use fading_product::product::ProductModel;

fn main() -> fading_product::Result<()> {
    let ladder = [(2.0, 0.9), (6.0, 1.3), (10.0, 2.7)];
    let models: Vec<ProductModel> = ladder
        .iter()
        .map(|&(alpha2, mu2)| {
            ProductModel::new(
                KappaMuParams::new(1.1, 1.2, 1.0)?,
                AlphaMuParams::new(alpha2, mu2, 1.0)?,
            )
        })
        .collect::<fading_product::Result<_>>()?;

    print!("{:>5}", "z");
    for (alpha2, mu2) in ladder {
        print!("  F(a2={alpha2},mu2={mu2})");
    }
    println!();
    for i in 1..=12 {
        let z = 0.25 * i as f64;
        print!("{z:>5.2}");
        for m in &models {
            print!("  {:>18.12}", m.cdf_series(z)?.value);
        }
        println!();
    }
    Ok(())
}
