//! Evaluate the product envelope density with both engines and compare.
//!
//! The series route reports its diagnostics: terms of the outer Bessel-index
//! sum, whether the cluster parameter had to be nudged off a gamma pole, and
//! the truncation estimate.

use fading_product::distributions::{AlphaMuParams, KappaMuParams};
use fading_product::product::ProductModel;

fn main() -> fading_product::Result<()> {
    let x = KappaMuParams::new(1.1, 1.2, 1.0)?;
    let y = AlphaMuParams::new(6.0, 1.3, 1.0)?;
    let model = ProductModel::new(x, y)?;

    println!(
        "product of kappa-mu ({}, {}) and alpha-mu ({}, {}), exponent {}/{}",
        x.kappa, x.mu, y.alpha, y.mu, model.exponent.p, model.exponent.q
    );
    println!("{:>6} {:>22} {:>22} {:>10} {:>7} {:>10}", "z", "series", "quadrature", "rel diff", "terms", "perturbed");
    for z in [0.1, 0.25, 0.5, 1.0, 1.5, 2.0, 3.0] {
        let s = model.pdf_series(z)?;
        let q = model.pdf_quadrature(z)?;
        let rel = (s.value - q).abs() / q;
        println!(
            "{z:>6.2} {:>22.15e} {q:>22.15e} {rel:>10.2e} {:>7} {:>10}",
            s.value, s.terms_used, s.perturbed
        );
    }

    // kappa = 0 collapses the outer sum to a single term
    let rayleigh_like = ProductModel::new(KappaMuParams::new(0.0, 2.0, 1.0)?, y)?;
    let s = rayleigh_like.pdf_series(1.0)?;
    println!("\nkappa = 0: outer sum has {} term(s), value {:.12e}", s.terms_used, s.value);
    Ok(())
}
