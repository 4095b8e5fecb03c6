//! The two base fading laws and their exact samplers.
//!
//! The line-of-sight multipath factor follows the kappa-mu law, the
//! non-linear shadowing factor the alpha-mu law.  Densities are evaluated
//! through the reduced Bessel series so that `kappa = 0` is exact rather than
//! a 0/0 limit, and both laws expose closed-form moments, log-densities for
//! quadrature, and samplers built on exact distributional representations.

use crate::error::{Error, Result};
use crate::quadrature::integrate_positive_ln;
use crate::specfun::{digamma, ln_bessel_i_reduced, ln_gamma, pfq, PfqArgs};
use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson};
use serde::{Deserialize, Serialize};

/// Parameters of the line-of-sight multipath factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaMuParams {
    /// Ratio of dominant-component power to scattered power (>= 0).
    pub kappa: f64,
    /// Number of multipath clusters (> 0).
    pub mu: f64,
    /// rms of the envelope, sqrt(E[R^2]) (> 0).
    pub r_hat: f64,
}

/// Parameters of the non-linear shadowing factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaMuParams {
    /// Non-linearity exponent of the propagation medium (> 0).
    pub alpha: f64,
    /// Number of multipath clusters (> 0).
    pub mu: f64,
    /// alpha-root of E[R^alpha] (> 0).
    pub r_hat: f64,
}

impl KappaMuParams {
    pub fn new(kappa: f64, mu: f64, r_hat: f64) -> Result<Self> {
        if !(kappa >= 0.0) || !(mu > 0.0) || !(r_hat > 0.0) {
            return Err(Error::Domain(format!(
                "kappa-mu needs kappa >= 0, mu > 0, r_hat > 0; got ({kappa}, {mu}, {r_hat})"
            )));
        }
        Ok(KappaMuParams { kappa, mu, r_hat })
    }

    /// Build parameters whose mean envelope equals `r_bar`, inverting
    /// `E[R] = r_hat Γ(mu+1/2) e^{-kappa mu} 1F1(mu+1/2; mu; kappa mu)
    ///         / (Γ(mu) sqrt(mu (1+kappa)))`.
    pub fn from_mean_envelope(kappa: f64, mu: f64, r_bar: f64) -> Result<Self> {
        if !(r_bar > 0.0) {
            return Err(Error::Domain(format!("mean envelope must be positive, got {r_bar}")));
        }
        let base = Self::new(kappa, mu, 1.0)?;
        let mean_unit = base.envelope_moment(1.0)?;
        Self::new(kappa, mu, r_bar / mean_unit)
    }

    /// `E[R^n]` in closed form.
    pub fn envelope_moment(&self, n: f64) -> Result<f64> {
        let x = self.kappa * self.mu;
        let hyp = pfq(
            &PfqArgs::new(vec![self.mu + n / 2.0], vec![self.mu], x)?,
            10_000,
        )?
        .value;
        let ln = n * self.r_hat.ln() + ln_gamma(self.mu + n / 2.0)? - ln_gamma(self.mu)?
            - x
            - (n / 2.0) * (self.mu * (1.0 + self.kappa)).ln();
        Ok(ln.exp() * hyp)
    }

    /// Natural log of the envelope density; `-inf` where it vanishes.
    pub fn ln_envelope_pdf(&self, r: f64) -> f64 {
        let (kappa, mu, rh) = (self.kappa, self.mu, self.r_hat);
        if r < 0.0 {
            return f64::NEG_INFINITY;
        }
        let lead = 2.0 * mu - 1.0; // exponent of the leading power of r
        if r == 0.0 {
            return if lead > 0.0 {
                f64::NEG_INFINITY
            } else if lead == 0.0 {
                (2.0 * mu.powf(mu) * (1.0 + kappa).powf(mu)).ln()
                    - kappa * mu
                    - 2.0 * mu * rh.ln()
                    - ln_gamma(mu).expect("mu > 0")
            } else {
                f64::INFINITY
            };
        }
        let rr = (r / rh) * (r / rh);
        let u = mu * mu * kappa * (1.0 + kappa) * rr;
        let reduced = ln_bessel_i_reduced(mu - 1.0, u).expect("order mu-1 > -1, u >= 0");
        2f64.ln() + mu * mu.ln() + mu * (1.0 + kappa).ln() - kappa * mu + lead * r.ln()
            - 2.0 * mu * rh.ln()
            - mu * (1.0 + kappa) * rr
            + reduced
    }

    /// Envelope density. Exact at `kappa = 0` and at `r = 0` (analytic limit).
    pub fn envelope_pdf(&self, r: f64) -> f64 {
        self.ln_envelope_pdf(r).exp()
    }

    /// Power density of `W = R^2`.
    pub fn power_pdf(&self, w: f64) -> f64 {
        if w < 0.0 {
            return 0.0;
        }
        if w == 0.0 {
            let lead = self.mu - 1.0;
            return if lead > 0.0 {
                0.0
            } else if lead == 0.0 {
                // mu = 1: f_W(0) = f_R(0+)/(2 r) limit = (1+kappa) e^{-kappa} / r_hat^2
                (1.0 + self.kappa) * (-self.kappa).exp() / (self.r_hat * self.r_hat)
            } else {
                f64::INFINITY
            };
        }
        let r = w.sqrt();
        (self.ln_envelope_pdf(r) - (2.0 * r).ln()).exp()
    }

    /// CDF of the envelope by adaptive quadrature of the density.
    pub fn cdf_quadrature(&self, r: f64) -> Result<f64> {
        if r <= 0.0 {
            return Ok(0.0);
        }
        let q = integrate_positive_ln(|y| self.ln_envelope_pdf(y), r, 1e-11)?;
        Ok(q.value.clamp(0.0, 1.0))
    }

    /// `E[ln R]`, from the Poisson-mixture representation of the power.
    pub(crate) fn mean_log_envelope(&self) -> f64 {
        let lam = self.kappa * self.mu;
        let scale = self.r_hat * self.r_hat / (self.mu * (1.0 + self.kappa));
        let mut weight = (-lam).exp();
        let mut acc = 0.0;
        let mut total = 0.0;
        for p in 0..1000 {
            acc += weight * digamma(self.mu + p as f64);
            total += weight;
            if total > 1.0 - 1e-17 {
                break;
            }
            weight *= lam / (p as f64 + 1.0);
        }
        0.5 * (scale.ln() + acc)
    }
}

impl AlphaMuParams {
    pub fn new(alpha: f64, mu: f64, r_hat: f64) -> Result<Self> {
        if !(alpha > 0.0) || !(mu > 0.0) || !(r_hat > 0.0) {
            return Err(Error::Domain(format!(
                "alpha-mu needs alpha > 0, mu > 0, r_hat > 0; got ({alpha}, {mu}, {r_hat})"
            )));
        }
        Ok(AlphaMuParams { alpha, mu, r_hat })
    }

    /// Build parameters whose mean envelope equals `r_bar`:
    /// `r_hat = r_bar mu^{1/alpha} Γ(mu) / Γ(mu + 1/alpha)`.
    pub fn from_mean_envelope(alpha: f64, mu: f64, r_bar: f64) -> Result<Self> {
        if !(r_bar > 0.0) {
            return Err(Error::Domain(format!("mean envelope must be positive, got {r_bar}")));
        }
        Self::new(alpha, mu, 1.0)?;
        let ln = (1.0 / alpha) * mu.ln() + ln_gamma(mu)? - ln_gamma(mu + 1.0 / alpha)?;
        Self::new(alpha, mu, r_bar * ln.exp())
    }

    /// `E[R^n] = r_hat^n Γ(mu + n/alpha) / (mu^{n/alpha} Γ(mu))`.
    pub fn envelope_moment(&self, n: f64) -> Result<f64> {
        let ln = n * self.r_hat.ln() + ln_gamma(self.mu + n / self.alpha)?
            - (n / self.alpha) * self.mu.ln()
            - ln_gamma(self.mu)?;
        Ok(ln.exp())
    }

    /// Natural log of the envelope density; `-inf` where it vanishes.
    pub fn ln_pdf(&self, r: f64) -> f64 {
        let (alpha, mu, rh) = (self.alpha, self.mu, self.r_hat);
        if r < 0.0 {
            return f64::NEG_INFINITY;
        }
        let lead = alpha * mu - 1.0;
        if r == 0.0 {
            return if lead > 0.0 {
                f64::NEG_INFINITY
            } else if lead == 0.0 {
                (alpha * mu.powf(mu)).ln() - ln_gamma(mu).expect("mu > 0") - alpha * mu * rh.ln()
            } else {
                f64::INFINITY
            };
        }
        alpha.ln() + mu * mu.ln() - ln_gamma(mu).expect("mu > 0") + lead * r.ln()
            - alpha * mu * rh.ln()
            - mu * (r / rh).powf(alpha)
    }

    pub fn pdf(&self, r: f64) -> f64 {
        self.ln_pdf(r).exp()
    }

    /// CDF of the envelope by adaptive quadrature of the density.
    pub fn cdf_quadrature(&self, r: f64) -> Result<f64> {
        if r <= 0.0 {
            return Ok(0.0);
        }
        let q = integrate_positive_ln(|y| self.ln_pdf(y), r, 1e-11)?;
        Ok(q.value.clamp(0.0, 1.0))
    }

    /// `E[ln R] = (psi(mu) - ln mu)/alpha + ln r_hat`.
    #[cfg(test)]
    pub(crate) fn mean_log_envelope(&self) -> f64 {
        (digamma(self.mu) - self.mu.ln()) / self.alpha + self.r_hat.ln()
    }
}

/// One kappa-mu envelope draw, via the exact Poisson mixture of gammas:
/// `W = r_hat^2/(mu(1+kappa)) G`, `G ~ Gamma(mu + P, 1)`, `P ~ Poisson(kappa mu)`.
pub fn draw_kappa_mu<R: Rng + ?Sized>(params: &KappaMuParams, rng: &mut R) -> f64 {
    let lam = params.kappa * params.mu;
    let p = if lam > 0.0 {
        Poisson::new(lam).expect("lambda > 0").sample(rng)
    } else {
        0.0
    };
    let shape = params.mu + p;
    let g: f64 = Gamma::new(shape, 1.0).expect("shape > 0").sample(rng);
    let scale = params.r_hat * params.r_hat / (params.mu * (1.0 + params.kappa));
    (scale * g).sqrt()
}

/// One alpha-mu envelope draw; `R^alpha` is gamma distributed.
pub fn draw_alpha_mu<R: Rng + ?Sized>(params: &AlphaMuParams, rng: &mut R) -> f64 {
    let g: f64 = Gamma::new(params.mu, 1.0).expect("shape > 0").sample(rng);
    let ralpha = g * params.r_hat.powf(params.alpha) / params.mu;
    ralpha.powf(1.0 / params.alpha)
}

/// `n` kappa-mu envelope samples from the given stream.
pub fn sample_kappa_mu<R: Rng + ?Sized>(params: &KappaMuParams, rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| draw_kappa_mu(params, rng)).collect()
}

/// `n` alpha-mu envelope samples from the given stream.
pub fn sample_alpha_mu<R: Rng + ?Sized>(params: &AlphaMuParams, rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| draw_alpha_mu(params, rng)).collect()
}

/// Mean envelope by quadrature; the round-trip check for the `from_mean` constructors.
#[cfg(test)]
pub(crate) fn mean_envelope_quadrature(
    ln_pdf: impl Fn(f64) -> f64,
) -> Result<crate::quadrature::QuadResult> {
    integrate_positive_ln(|r| ln_pdf(r) + r.ln(), f64::INFINITY, 1e-11)
}
