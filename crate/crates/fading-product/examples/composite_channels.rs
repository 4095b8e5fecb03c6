//! The named composite channels: a classic line-of-sight law times an
//! alpha-mu shadowing factor, with the multipath factor normalized to unit
//! mean envelope.

use fading_product::distributions::AlphaMuParams;
use fading_product::product::{CompositeCase, ProductModel};

fn main() -> fading_product::Result<()> {
    let shadowing = AlphaMuParams::new(3.0, 1.5, 1.0)?;
    let cases = [
        ("Rice (k = 3)", CompositeCase::RiceAlphaMu { k: 3.0 }),
        ("Rayleigh", CompositeCase::RayleighAlphaMu),
        ("Nakagami (m = 2)", CompositeCase::NakagamiAlphaMu { m: 2.0 }),
        ("one-sided Gaussian", CompositeCase::OneSidedGaussianAlphaMu),
    ];

    println!(
        "shadowing factor: alpha = {}, mu = {}, rhat = {}",
        shadowing.alpha, shadowing.mu, shadowing.r_hat
    );
    println!(
        "{:>20} {:>8} {:>6} {:>12} {:>16} {:>16}",
        "composite", "kappa1", "mu1", "rhat1", "E[X] (closed)", "f_Z(1) series"
    );
    for (name, case) in cases {
        let model = ProductModel::special_case(case, shadowing)?;
        println!(
            "{name:>20} {:>8.3} {:>6.2} {:>12.8} {:>16.12} {:>16.12}",
            model.x.kappa,
            model.x.mu,
            model.x.r_hat,
            model.x.envelope_moment(1.0)?,
            model.pdf_series(1.0)?.value,
        );
    }
    Ok(())
}
