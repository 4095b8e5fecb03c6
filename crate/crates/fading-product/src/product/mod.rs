//! The product model `Z = X · Y`: a kappa-mu line-of-sight multipath
//! envelope times an alpha-mu non-linear shadowing envelope.
//!
//! Two independent evaluation routes are maintained for the PDF and CDF: the
//! residue series built on generalized hypergeometric functions, and adaptive
//! quadrature of the defining integral.  They share nothing beyond the factor
//! parameter structs, so one can arbitrate the other.

mod quadrature;
pub(crate) mod series;

pub use quadrature::kernel_integral_quadrature;
pub(crate) use series::Geom;

use crate::distributions::{AlphaMuParams, KappaMuParams};
use crate::error::{Error, Result};
use crate::eval::EvalResult;
use crate::numeric::{Backend, F64Backend};
use crate::specfun::{rational_approx, RationalExponent};
use serde::{Deserialize, Serialize};

/// Truncation and perturbation policy for the series engines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesConfig {
    /// Bessel-index truncation of the outer sum.
    pub k_max: usize,
    /// Relative tolerance of a converged evaluation.
    pub rel_tol: f64,
    /// Nudge applied to the shadowing cluster parameter on a gamma pole.
    pub perturbation_eps: f64,
    /// Term limit of each inner hypergeometric series.
    pub pfq_term_limit: usize,
    /// Extrapolate the pole nudge away with a second evaluation at twice the
    /// offset.
    pub richardson: bool,
    /// Ceiling for the big-float escalation path.
    pub max_precision_bits: u32,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        SeriesConfig {
            k_max: 200,
            rel_tol: 1e-10,
            perturbation_eps: 1e-4,
            pfq_term_limit: 10_000,
            richardson: false,
            max_precision_bits: 4096,
        }
    }
}

impl SeriesConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(Error::Domain(format!(
                "rel_tol must lie in (0, 1), got {}",
                self.rel_tol
            )));
        }
        if !(self.perturbation_eps > 0.0 && self.perturbation_eps <= 1e-2) {
            return Err(Error::Domain(format!(
                "perturbation_eps must lie in (0, 1e-2], got {}",
                self.perturbation_eps
            )));
        }
        if self.k_max == 0 || self.pfq_term_limit == 0 {
            return Err(Error::Domain("term limits must be positive".into()));
        }
        Ok(())
    }

    /// Same policy at a looser relative tolerance (for bulk grids where the
    /// default would trigger needless big-float escalation).
    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }
}

/// Maximum denominator used when the shadowing exponent is approximated by a
/// rational.
pub const EXPONENT_MAX_DENOMINATOR: u64 = 64;

/// The composite model: factor parameters plus the rational exponent and the
/// series policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductModel {
    pub x: KappaMuParams,
    pub y: AlphaMuParams,
    /// Lowest-terms `p/q ≈ alpha_y / 2`; the series evaluate the model with
    /// the exponent exactly `2p/q`.
    pub exponent: RationalExponent,
    pub series_cfg: SeriesConfig,
}

/// Named composite channels, each pairing a classic line-of-sight law with an
/// alpha-mu shadowing factor; the multipath factor is normalized to unit mean
/// envelope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CompositeCase {
    /// Rice factor with the given k.
    RiceAlphaMu { k: f64 },
    RayleighAlphaMu,
    /// Nakagami-m factor with the given m.
    NakagamiAlphaMu { m: f64 },
    OneSidedGaussianAlphaMu,
}

impl ProductModel {
    pub fn new(x: KappaMuParams, y: AlphaMuParams) -> Result<Self> {
        Self::with_config(x, y, SeriesConfig::default())
    }

    pub fn with_config(
        x: KappaMuParams,
        y: AlphaMuParams,
        series_cfg: SeriesConfig,
    ) -> Result<Self> {
        series_cfg.validate()?;
        let exponent = rational_approx(y.alpha / 2.0, EXPONENT_MAX_DENOMINATOR)?;
        Ok(ProductModel {
            x,
            y,
            exponent,
            series_cfg,
        })
    }

    /// Compatibility variant applying the even-numerator/denominator
    /// decrement rule some prior treatments use.  The decrement changes the
    /// represented exponent (`alpha_y = 4` becomes `alpha_y = 2`), so the
    /// series then evaluate a genuinely different model than the sampler and
    /// the quadrature engine; this exists to reproduce that behavior, not to
    /// endorse it.
    pub fn with_parity_decrement(
        x: KappaMuParams,
        y: AlphaMuParams,
        series_cfg: SeriesConfig,
    ) -> Result<Self> {
        series_cfg.validate()?;
        let exponent =
            rational_approx(y.alpha / 2.0, EXPONENT_MAX_DENOMINATOR)?.with_parity_decrement();
        Ok(ProductModel {
            x,
            y,
            exponent,
            series_cfg,
        })
    }

    /// Build one of the named composite channels (unit-mean multipath factor).
    pub fn special_case(case: CompositeCase, y: AlphaMuParams) -> Result<Self> {
        let x = match case {
            CompositeCase::RiceAlphaMu { k } => {
                if !(k > 0.0) {
                    return Err(Error::Domain(format!("Rice k must be positive, got {k}")));
                }
                KappaMuParams::from_mean_envelope(k, 1.0, 1.0)?
            }
            CompositeCase::RayleighAlphaMu => KappaMuParams::from_mean_envelope(0.0, 1.0, 1.0)?,
            CompositeCase::NakagamiAlphaMu { m } => {
                if !(m > 0.0) {
                    return Err(Error::Domain(format!(
                        "Nakagami m must be positive, got {m}"
                    )));
                }
                KappaMuParams::from_mean_envelope(0.0, m, 1.0)?
            }
            CompositeCase::OneSidedGaussianAlphaMu => {
                KappaMuParams::from_mean_envelope(0.0, 0.5, 1.0)?
            }
        };
        Self::new(x, y)
    }

    /// Product density at `z` by the residue series.
    ///
    /// Gamma poles on the parameter lattice are cleared by nudging `mu_y`
    /// (flagged in the result); evaluations whose signed-log pass cancels
    /// away too many digits are transparently redone in big-float arithmetic.
    pub fn pdf_series(&self, z: f64) -> Result<EvalResult> {
        if !(z > 0.0) {
            return Err(Error::Domain(format!("pdf_series needs z > 0, got {z}")));
        }
        series::product_series_eval(self, z, series::SeriesKind::Density)
    }

    /// Product CDF at `z` by the termwise-integrated residue series.
    pub fn cdf_series(&self, z: f64) -> Result<EvalResult> {
        if !(z > 0.0) {
            return Err(Error::Domain(format!("cdf_series needs z > 0, got {z}")));
        }
        series::product_series_eval(self, z, series::SeriesKind::Distribution)
    }

    /// Product density at `z` by adaptive quadrature of the defining
    /// integral; the in-repo oracle for the series engine.
    pub fn pdf_quadrature(&self, z: f64) -> Result<f64> {
        if !(z > 0.0) {
            return Err(Error::Domain(format!(
                "pdf_quadrature needs z > 0, got {z}"
            )));
        }
        quadrature::pdf_quadrature_impl(self, z)
    }

    /// Product CDF at `z` by nested quadrature.
    pub fn cdf_quadrature(&self, z: f64) -> Result<f64> {
        quadrature::cdf_quadrature_impl(self, z)
    }

    /// `E[Z^n]` in closed form (moments of independent factors multiply).
    pub fn moment(&self, n: f64) -> Result<f64> {
        Ok(self.x.envelope_moment(n)? * self.y.envelope_moment(n)?)
    }

    /// `E[Z^2]`, the power normalization of the SNR map.
    pub fn mean_square(&self) -> Result<f64> {
        self.moment(2.0)
    }

    /// `E[Z^n]` by nested quadrature; oracle for [`Self::moment`].
    pub fn moment_quadrature(&self, n: f64) -> Result<f64> {
        quadrature::moment_quadrature_impl(self, n)
    }

    /// Coefficients of the series at envelope `z` and Bessel index `k`.
    pub fn coefficients(&self, z: f64, k: usize) -> Result<SeriesCoefficients> {
        if !(z > 0.0) {
            return Err(Error::Domain(format!("coefficients need z > 0, got {z}")));
        }
        let g = Geom::of(self, self.y.mu);
        let (kappa, mu_x, rhx) = (g.kappa_x, g.mu_x, g.rhat_x);
        let alpha = 2.0 * g.p as f64 / g.q as f64;
        let a1 = 2.0 * mu_x * (1.0 + kappa).powf(0.5 * (mu_x + 1.0))
            / (kappa.powf(0.5 * (mu_x - 1.0)) * (kappa * mu_x).exp());
        let m1 = alpha * g.mu_y.powf(g.mu_y)
            / (crate::specfun::ln_gamma(g.mu_y)?.exp()
                * g.rhat_y.powf(alpha * g.mu_y)
                * rhx.powf(mu_x + 1.0));
        let a2 = m1 * z.powf(mu_x);
        let m2 = (mu_x * (kappa * (1.0 + kappa)).sqrt() / rhx).powf(mu_x - 1.0);
        let a3 = m2 * z.powf(mu_x - 1.0);
        let a1_a3 = 2.0
            * mu_x.powf(mu_x)
            * (1.0 + kappa).powf(mu_x)
            * (-kappa * mu_x).exp()
            * (z / rhx).powf(mu_x - 1.0);
        let m3 = mu_x * (1.0 + kappa) / (rhx * rhx);
        let b1 = m3 * z * z;
        let b2 = (g.mu_y / g.rhat_y.powf(alpha)).powf(2.0 / alpha);

        // phi_k mixes huge gammas with tiny powers: signed-log arithmetic
        let be = F64Backend;
        let kf = k as f64;
        let nu = g.mu_y * g.p as f64 / g.q as f64;
        let mut phi = be.v_from_p(&(a1_a3 * m1 / 2.0));
        phi = be.v_mul(&phi, &be.v_pow(&z, &(2.0 * mu_x - 1.0)));
        phi = be.v_mul(&phi, &be.v_from_p(&(2.0 / alpha)));
        phi = be.v_div(&phi, &be.v_gamma(&(kf + 1.0))?);
        phi = be.v_div(&phi, &be.v_gamma(&(kf + mu_x))?);
        if k > 0 {
            let base = mu_x * mu_x * kappa * (1.0 + kappa) / (rhx * rhx);
            phi = be.v_mul(&phi, &be.v_pow(&base, &kf));
            phi = be.v_mul(&phi, &be.v_pow(&(z * z), &kf));
        }
        phi = be.v_mul(&phi, &be.v_pow(&b1, &-(kf + mu_x)));
        phi = be.v_mul(&phi, &be.v_pow(&b2, &-nu));

        Ok(SeriesCoefficients {
            a1,
            a2,
            a3,
            a1_a3,
            b1,
            b2,
            m1,
            m2,
            m3,
            phi_k: be.v_to_f64(&phi),
        })
    }
}

/// The named coefficients of the series formulas at one `(z, k)`, exposed for
/// inspection and testing.  `a1` and `a3` separately carry the
/// `kappa^{±(mu-1)/2}` powers that blow up or vanish as `kappa -> 0`; their
/// product `a1_a3` is computed analytically and stays finite.
#[derive(Debug, Clone, Copy)]
pub struct SeriesCoefficients {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    /// `a1 * a3` with the kappa powers cancelled analytically.
    pub a1_a3: f64,
    pub b1: f64,
    pub b2: f64,
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    /// Per-k coefficient of the outer Bessel-index sum.
    pub phi_k: f64,
}

/// Kernel integral
/// `∫₀^∞ t^{(α µy/2) - s - 1} exp(-b₁/t - b₂^{α/2} t^{α/2}) dt`
/// by its residue-series expansion.
///
/// `exponent` must represent `alpha_y / 2`.  A gamma argument inside the pole
/// guard is reported as [`Error::Pole`]; the caller decides on perturbation.
pub fn kernel_integral_series(
    b1: f64,
    b2: f64,
    s: f64,
    alpha_y: f64,
    mu_y: f64,
    exponent: &RationalExponent,
    cfg: &SeriesConfig,
) -> Result<EvalResult> {
    if !(b1 > 0.0 && b2 > 0.0) {
        return Err(Error::Domain(format!(
            "kernel integral needs b1, b2 > 0; got ({b1}, {b2})"
        )));
    }
    if !(mu_y > 0.0) || !(alpha_y > 0.0) {
        return Err(Error::Domain(format!(
            "kernel integral needs alpha_y, mu_y > 0; got ({alpha_y}, {mu_y})"
        )));
    }
    if (exponent.ratio() - alpha_y / 2.0).abs() > 1e-9 * alpha_y {
        return Err(Error::Domain(format!(
            "exponent {}/{} does not represent alpha_y/2 = {}",
            exponent.p,
            exponent.q,
            alpha_y / 2.0
        )));
    }
    cfg.validate()?;
    let g = Geom {
        kappa_x: 0.0,
        mu_x: s,
        rhat_x: 1.0,
        mu_y,
        rhat_y: 1.0,
        p: exponent.p,
        q: exponent.q,
    };
    series::kernel_integral_series_impl(&g, b1, b2, s, cfg)
}
