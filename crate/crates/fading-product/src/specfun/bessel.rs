//! Modified Bessel function of the first kind, in the forms the fading
//! densities need.
//!
//! The envelope densities multiply `I_nu(z)` by a prefactor carrying
//! `kappa^{-(nu)/2}`‑type singular powers, so the workhorse here is the
//! *reduced* series with the leading power split off:
//!
//! `reduced(nu, u) = sum_k u^k / (k! Γ(nu+k+1)) = I_nu(2√u) / u^{nu/2}`
//!
//! which is finite and smooth at `u = 0`.  `bessel_i` itself is recovered by
//! putting the power back.

use super::gamma::ln_gamma;
use crate::error::{Error, Result};

/// Argument (z = 2 sqrt(u)) above which the asymptotic expansion takes over.
const ASYMPTOTIC_SWITCH: f64 = 35.0;

/// `ln( sum_k u^k / (k! Γ(order+k+1)) )` for `u >= 0`, `order > -1`.
pub fn ln_bessel_i_reduced(order: f64, u: f64) -> Result<f64> {
    if !(order > -1.0) {
        return Err(Error::Domain(format!(
            "bessel order must exceed -1, got {order}"
        )));
    }
    if !(u >= 0.0) {
        return Err(Error::Domain(format!("reduced bessel needs u >= 0, got {u}")));
    }
    let ln_g1 = ln_gamma(order + 1.0)?;
    if u == 0.0 {
        return Ok(-ln_g1);
    }
    let z = 2.0 * u.sqrt();
    if z < ASYMPTOTIC_SWITCH {
        // direct series; all terms positive
        let mut term = 1.0f64;
        let mut sum = 1.0f64;
        for k in 1..400 {
            let kf = k as f64;
            term *= u / (kf * (order + kf));
            sum += term;
            if term < sum * 1e-17 {
                break;
            }
        }
        Ok(sum.ln() - ln_g1)
    } else {
        // I_nu(z) ~ e^z / sqrt(2 pi z) * sum_m (-1)^m a_m(nu) / z^m
        let ln_i = ln_bessel_i_asymptotic(order, z)?;
        Ok(ln_i - order * (z / 2.0).ln())
    }
}

fn ln_bessel_i_asymptotic(order: f64, z: f64) -> Result<f64> {
    let mu = 4.0 * order * order;
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    for m in 1..40 {
        let mf = m as f64;
        term *= -(mu - (2.0 * mf - 1.0).powi(2)) / (mf * 8.0 * z);
        sum += term;
        if term.abs() < 1e-17 {
            break;
        }
    }
    if sum <= 0.0 {
        return Err(Error::Domain(format!(
            "asymptotic bessel series failed for order {order}, z {z}"
        )));
    }
    Ok(z - 0.5 * (2.0 * std::f64::consts::PI * z).ln() + sum.ln())
}

/// Modified Bessel function of the first kind `I_order(z)`.
///
/// Overflow past the representable range comes back as `+inf`.
pub fn bessel_i(order: f64, z: f64) -> Result<f64> {
    if !(z >= 0.0) {
        return Err(Error::Domain(format!("bessel_i needs z >= 0, got {z}")));
    }
    if z == 0.0 {
        return Ok(if order == 0.0 {
            1.0
        } else if order > 0.0 {
            0.0
        } else {
            f64::INFINITY
        });
    }
    let u = (z / 2.0) * (z / 2.0);
    let ln = ln_bessel_i_reduced(order, u)? + order * (z / 2.0).ln();
    Ok(ln.exp())
}
