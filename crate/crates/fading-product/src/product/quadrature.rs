//! Quadrature engines: the independent oracle side of every dual route.
//!
//! The defining integral of the product density is integrated in log space
//! over `y = e^u`, which keeps the integrand finite across the dynamic range
//! of both factor densities.  Nothing here shares code with the series path
//! beyond the factor log-densities themselves.

use crate::error::Result;
use crate::product::ProductModel;
use crate::quadrature::integrate_positive_ln;

const QUAD_REL_TOL: f64 = 1e-11;

/// Log of the integrand of the product-density integral at (z, y).
fn ln_integrand(model: &ProductModel, z: f64, y: f64) -> f64 {
    model.x.ln_envelope_pdf(z / y) - y.ln() + model.y.ln_pdf(y)
}

/// Product density by adaptive quadrature of the conditional-density integral.
pub(crate) fn pdf_quadrature_impl(model: &ProductModel, z: f64) -> Result<f64> {
    let q = integrate_positive_ln(|y| ln_integrand(model, z, y), f64::INFINITY, QUAD_REL_TOL)?;
    Ok(q.value)
}

/// Product CDF by quadrature of the quadrature density (nested).
pub(crate) fn cdf_quadrature_impl(model: &ProductModel, z: f64) -> Result<f64> {
    if z <= 0.0 {
        return Ok(0.0);
    }
    let q = integrate_positive_ln(
        |u| match pdf_quadrature_impl(model, u) {
            Ok(v) if v > 0.0 => v.ln(),
            _ => f64::NEG_INFINITY,
        },
        z,
        1e-9,
    )?;
    Ok(q.value.clamp(0.0, 1.0))
}

/// `E[Z^n]` by quadrature of the quadrature density (nested).
pub(crate) fn moment_quadrature_impl(model: &ProductModel, n: f64) -> Result<f64> {
    let q = integrate_positive_ln(
        |u| match pdf_quadrature_impl(model, u) {
            Ok(v) if v > 0.0 => v.ln() + n * u.ln(),
            _ => f64::NEG_INFINITY,
        },
        f64::INFINITY,
        1e-9,
    )?;
    Ok(q.value)
}

/// The kernel integral evaluated directly:
/// `∫₀^∞ t^{(α µy/2) - s - 1} exp(-b₁/t - b₂^{α/2} t^{α/2}) dt`.
pub fn kernel_integral_quadrature(
    b1: f64,
    b2: f64,
    s: f64,
    alpha_y: f64,
    mu_y: f64,
) -> Result<f64> {
    let rho = alpha_y / 2.0;
    let nu = rho * mu_y;
    let c = b2.powf(rho);
    let q = integrate_positive_ln(
        |t| (nu - s - 1.0) * t.ln() - b1 / t - c * t.powf(rho),
        f64::INFINITY,
        QUAD_REL_TOL,
    )?;
    Ok(q.value)
}
