//! Ergodic channel capacity of the composite channel under optimal rate
//! adaptation: the SNR power density and the capacity integral
//! `C = (B/ln 2) ∫ ln(1+γ) f_γ(γ) dγ`.
//!
//! Quadrature over the power density is the authoritative route.  The series
//! route splits the domain at `γ = split`: below the split the Taylor
//! expansion of `ln(1+γ)` is integrated termwise against the expanded power
//! series (each term reduces to an incomplete-moment weight with a digamma
//! closed form at the split), above it `ln γ` integrates through the
//! closed-form mean log-SNR minus a termwise lower piece, and the remaining
//! `ln(1+1/γ)` tail — which has no convergent ascending-moment expansion —
//! is a small correction integrated adaptively over pointwise series values.

use crate::error::{Error, Result};
use crate::eval::EvalResult;
use crate::montecarlo::{mean_log1p_snr, sample_product, McConfig};
use crate::numeric::{Backend, CancellationMeter};
use crate::product::series::{
    effective_mu_y, expanded_power_scan, min_pole_distance, pdf_series_at_geom, run_escalated,
    CoreOutcome, EvalBody, Geom,
};
use crate::product::{ProductModel, SeriesConfig};
use crate::quadrature::integrate_adaptive;
use crate::specfun::{digamma, ln_gamma, POLE_GUARD};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::cell::RefCell;

/// Default split point of the series route (the Taylor radius).
pub const DEFAULT_SPLIT: f64 = 1.0;

/// One average-SNR operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrPoint {
    /// Average SNR, linear.
    pub gamma_bar: f64,
    /// `10 log10(gamma_bar)`.
    pub gamma_bar_db: f64,
    /// Channel bandwidth; `ln 2` reports capacity per unit bandwidth.
    pub bandwidth: f64,
}

impl SnrPoint {
    pub fn from_db(gamma_bar_db: f64, bandwidth: f64) -> Result<Self> {
        if !(bandwidth > 0.0) {
            return Err(Error::Domain(format!(
                "bandwidth must be positive, got {bandwidth}"
            )));
        }
        Ok(SnrPoint {
            gamma_bar: 10f64.powf(gamma_bar_db / 10.0),
            gamma_bar_db,
            bandwidth,
        })
    }

    pub fn from_linear(gamma_bar: f64, bandwidth: f64) -> Result<Self> {
        if !(gamma_bar > 0.0) || !(bandwidth > 0.0) {
            return Err(Error::Domain(format!(
                "gamma_bar and bandwidth must be positive, got ({gamma_bar}, {bandwidth})"
            )));
        }
        Ok(SnrPoint {
            gamma_bar,
            gamma_bar_db: 10.0 * gamma_bar.log10(),
            bandwidth,
        })
    }
}

/// SNR power density `f_γ(γ)` by the series engine, through the power map
/// `γ = γ̄ Z² / E[Z²]`.
pub fn power_pdf(model: &ProductModel, gamma: f64, gamma_bar: f64) -> Result<EvalResult> {
    let (z, jacobian) = power_map(model, gamma, gamma_bar)?;
    let r = model.pdf_series(z)?;
    Ok(EvalResult {
        value: r.value * jacobian,
        truncation_estimate: r.truncation_estimate * jacobian,
        ..r
    })
}

/// Change-of-variables consistency oracle for [`power_pdf`], built on the
/// quadrature envelope density.
pub fn power_pdf_quadrature(model: &ProductModel, gamma: f64, gamma_bar: f64) -> Result<f64> {
    let (z, jacobian) = power_map(model, gamma, gamma_bar)?;
    Ok(model.pdf_quadrature(z)? * jacobian)
}

fn power_map(model: &ProductModel, gamma: f64, gamma_bar: f64) -> Result<(f64, f64)> {
    if !(gamma > 0.0) || !(gamma_bar > 0.0) {
        return Err(Error::Domain(format!(
            "power map needs gamma, gamma_bar > 0; got ({gamma}, {gamma_bar})"
        )));
    }
    let omega = model.mean_square()?;
    let z = (gamma * omega / gamma_bar).sqrt();
    let jacobian = 0.5 * (omega / (gamma_bar * gamma)).sqrt();
    Ok((z, jacobian))
}

/// Ergodic capacity by adaptive quadrature over the quadrature density;
/// the authoritative route.
pub fn ecc_quadrature(model: &ProductModel, point: &SnrPoint) -> Result<f64> {
    let omega = model.mean_square()?;
    let scale = point.gamma_bar / omega;
    let q = crate::quadrature::integrate_positive_ln(
        |z| {
            let weight = (scale * z * z).ln_1p();
            if weight <= 0.0 {
                return f64::NEG_INFINITY;
            }
            match model.pdf_quadrature(z) {
                Ok(v) if v > 0.0 => weight.ln() + v.ln(),
                _ => f64::NEG_INFINITY,
            }
        },
        f64::INFINITY,
        1e-9,
    )?;
    Ok(point.bandwidth / std::f64::consts::LN_2 * q.value)
}

/// The termwise lower-domain piece of the series route:
/// `∫₀^s ln(1+γ) f_γ dγ  -  ∫₀^s ln γ f_γ dγ  -  ln β F_γ(s)`
/// assembled from the expanded power series with closed-form weights.
struct EccLowerBody<'a> {
    geom: Geom,
    cfg: &'a SeriesConfig,
    /// upper limit in the power variable `w = γ/β`
    x0: f64,
    /// SNR per unit power, `γ̄ / E[Z²]`
    beta: f64,
    split: f64,
}

impl EvalBody for EccLowerBody<'_> {
    fn run<B: Backend>(
        &self,
        be: &B,
        bits: Option<u32>,
        meter: &mut CancellationMeter,
    ) -> Result<CoreOutcome<B::V>> {
        let one = be.p(1.0);
        let two = be.p(2.0);
        let x0p = be.p(self.x0);
        let betap = be.p(self.beta);
        let ln_x0 = be.p_ln(&x0p);
        let ln_beta = be.p_ln(&betap);
        let ln1p_s = be.p_ln1p(&be.p(self.split));

        // correction nodes for J(e, s) = J(e, 1) - ∫_s^1 v^e/(1+v) dv
        let gl_nodes: Option<Vec<(B::P, B::P)>> = if self.split < 1.0 {
            let (xs, ws) = crate::quadrature::gl64();
            let half = 0.5 * (1.0 - self.split);
            let mid = 0.5 * (1.0 + self.split);
            Some(
                xs.iter()
                    .zip(ws)
                    .map(|(&x, &w)| (be.p(mid + half * x), be.p(w * half)))
                    .collect(),
            )
        } else {
            None
        };

        let mut s_ln1p = be.v_zero();
        let mut s_fw = be.v_zero();
        let mut s_lg = be.v_zero();

        let (terms, converged) = expanded_power_scan(
            be,
            &self.geom,
            self.cfg,
            self.x0,
            bits,
            meter,
            &mut |e, coef| {
                let xe = be.v_pow(&x0p, e);
                let inv_e = be.p_div(&one, e);

                // F_W weight: x0^e / e
                let t_fw = be.v_mul(coef, &be.v_mul(&xe, &be.v_from_p(&inv_e)));
                s_fw = be.v_add(&s_fw, &t_fw);

                // log weight: x0^e (e ln x0 - 1) / e^2
                let wlg = be.p_div(
                    &be.p_sub(&be.p_mul(e, &ln_x0), &one),
                    &be.p_mul(e, e),
                );
                let t_lg = be.v_mul(coef, &be.v_mul(&xe, &be.v_from_p(&wlg)));
                s_lg = be.v_add(&s_lg, &t_lg);

                // ln(1+γ) weight: x0^e ln(1+s)/e - β^{-e} J(e,s)/e
                let e2 = be.p_div(&be.p_add(e, &two), &two);
                let e1 = be.p_div(&be.p_add(e, &one), &two);
                let mut j = be.p_div(
                    &be.p_sub(&be.p_digamma(&e2), &be.p_digamma(&e1)),
                    &two,
                );
                if let Some(nodes) = &gl_nodes {
                    let mut corr = be.p(0.0);
                    for (v, w) in nodes {
                        let ve = be.p_pow(v, e);
                        corr = be.p_add(&corr, &be.p_mul(w, &be.p_div(&ve, &be.p_add(&one, v))));
                    }
                    j = be.p_sub(&j, &corr);
                }
                let t1 = be.v_mul(&xe, &be.v_from_p(&be.p_mul(&ln1p_s, &inv_e)));
                let t2 = be.v_mul(
                    &be.v_pow(&betap, &be.p_neg(e)),
                    &be.v_from_p(&be.p_mul(&j, &inv_e)),
                );
                let weight = be.v_add(&t1, &be.v_neg(&t2));
                s_ln1p = be.v_add(&s_ln1p, &be.v_mul(coef, &weight));
            },
        )?;

        // (S_ln1p - S_lg - ln β · S_fw) / 2
        let mut total = be.v_add(&s_ln1p, &be.v_neg(&s_lg));
        total = be.v_add(&total, &be.v_neg(&be.v_mul(&s_fw, &be.v_from_p(&ln_beta))));
        total = be.v_div(&total, &be.v_from_p(&two));

        Ok(CoreOutcome {
            sum: total,
            terms,
            tail_ln: f64::NEG_INFINITY,
            converged,
        })
    }
}

/// `E[Z²]` and `E[ln Z²]` of the model the series actually evaluate (the
/// effective exponent `2p/q` and the effective cluster parameter).
fn effective_power_stats(model: &ProductModel, geom: &Geom) -> Result<(f64, f64)> {
    let alpha = geom.alpha_eff();
    let ey2 = geom.rhat_y * geom.rhat_y
        * (ln_gamma(geom.mu_y + 2.0 / alpha)? - ln_gamma(geom.mu_y)?).exp()
        / geom.mu_y.powf(2.0 / alpha);
    let omega = model.x.r_hat * model.x.r_hat * ey2;
    let mean_ln_y = (digamma(geom.mu_y) - geom.mu_y.ln()) / alpha + geom.rhat_y.ln();
    let mean_ln_w = 2.0 * (model.x.mean_log_envelope() + mean_ln_y);
    Ok((omega, mean_ln_w))
}

/// The `∫_s^∞ ln(1+1/γ) f_γ dγ` correction, integrated adaptively over
/// pointwise series densities with a saddle-point skip for the deep tail.
///
/// The correction is bounded by `ln 2 · P(γ > split)`, a modest share of the
/// capacity, so its pointwise densities run at a correspondingly relaxed
/// tolerance; that keeps the big-float escalations in the tail shallow.
fn tail_correction(geom: &Geom, cfg: &SeriesConfig, x0: f64, split: f64) -> Result<f64> {
    let err: RefCell<Option<Error>> = RefCell::new(None);
    let rho = geom.rho();
    let c_exp = geom.b2().powf(rho);
    let tail_cfg = cfg.with_rel_tol((cfg.rel_tol * 1e3).clamp(cfg.rel_tol, 1e-4));

    let f_w = |w: f64| -> f64 {
        let z = w.sqrt();
        match pdf_series_at_geom(geom, z, &tail_cfg) {
            Ok(o) => o.value / (2.0 * z),
            Err(e) => {
                err.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        }
    };

    // integrand in v = x0 / w over (0, 1]
    let raw = |v: f64| -> f64 {
        if v <= 0.0 {
            return 0.0;
        }
        let w = x0 / v;
        (1.0 + v / split).ln() * f_w(w) * x0 / (v * v)
    };

    // decay exponent of the density envelope at w (Laplace saddle)
    let ln_bound = |w: f64| -> f64 {
        let b1 = geom.m3() * w;
        let t_star = (b1 / (rho * c_exp)).powf(1.0 / (rho + 1.0));
        -(b1 / t_star + c_exp * t_star.powf(rho)) + 8.0 * (w + 2.0).ln()
    };

    // establish the scale from moderate nodes before enabling the skip
    let scale = [0.9, 0.6, 0.3]
        .iter()
        .map(|&v| raw(v).abs())
        .fold(1e-300, f64::max);
    if let Some(e) = err.borrow_mut().take() {
        return Err(e);
    }

    let integrand = |v: f64| -> f64 {
        if v <= 0.0 {
            return 0.0;
        }
        let w = x0 / v;
        if ln_bound(w) + (x0 / (v * v)).ln() < scale.ln() - 46.0 {
            return 0.0; // provably negligible against the established scale
        }
        raw(v)
    };

    let q = integrate_adaptive(integrand, 0.0, 1.0, 1e-300, 1e-6, 200)?;
    if let Some(e) = err.borrow_mut().take() {
        return Err(e);
    }
    Ok(q.value)
}

fn ecc_series_at(
    model: &ProductModel,
    point: &SnrPoint,
    split: f64,
    mu_eff: f64,
) -> Result<(f64, usize, f64, bool)> {
    let cfg = &model.series_cfg;
    let geom = Geom::of(model, mu_eff);
    let (omega, mean_ln_w) = effective_power_stats(model, &geom)?;
    let beta = point.gamma_bar / omega;
    let x0 = split / beta;

    let lower = run_escalated(
        cfg,
        true,
        EccLowerBody {
            geom,
            cfg,
            x0,
            beta,
            split,
        },
    )?;
    let mean_ln_gamma = beta.ln() + mean_ln_w;
    let tail = tail_correction(&geom, cfg, x0, split)?;

    let nats = lower.value + mean_ln_gamma + tail;
    let factor = point.bandwidth / std::f64::consts::LN_2;
    Ok((
        factor * nats,
        lower.terms,
        factor * lower.truncation,
        lower.converged,
    ))
}

/// Ergodic capacity by the split-domain series route.
///
/// Agrees with [`ecc_quadrature`] within the configured tolerance wherever
/// the series converge; on failure callers fall back to quadrature.  On a
/// gamma-pole lattice the cluster nudge is extrapolated away with a second
/// evaluation, keeping the capacity error quadratic in the nudge.
pub fn ecc_series(model: &ProductModel, point: &SnrPoint, split: f64) -> Result<EvalResult> {
    if !(split > 0.0 && split <= 1.0) {
        return Err(Error::Domain(format!(
            "split must lie in (0, 1], got {split}"
        )));
    }
    let (mu_eff, perturbed) = effective_mu_y(model)?;
    if !perturbed {
        let (value, terms, trunc, converged) = ecc_series_at(model, point, split, mu_eff)?;
        return Ok(EvalResult {
            value,
            terms_used: terms,
            truncation_estimate: trunc,
            perturbed: false,
            converged,
        });
    }

    let eps = mu_eff - model.y.mu;
    let first = ecc_series_at(model, point, split, mu_eff)?;
    let double_clear = min_pole_distance(
        &Geom::of(model, model.y.mu + 2.0 * eps),
        model.series_cfg.k_max,
        None,
    ) >= 10.0 * POLE_GUARD;
    if double_clear {
        let second = ecc_series_at(model, point, split, model.y.mu + 2.0 * eps)?;
        Ok(EvalResult {
            value: 2.0 * first.0 - second.0,
            terms_used: first.1.max(second.1),
            truncation_estimate: first.2 + second.2,
            perturbed: true,
            converged: first.3 && second.3,
        })
    } else {
        Ok(EvalResult {
            value: first.0,
            terms_used: first.1,
            truncation_estimate: first.2,
            perturbed: true,
            converged: first.3,
        })
    }
}

/// Evaluation route of a capacity curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EccMethod {
    Series,
    Quadrature,
    MonteCarlo,
}

impl std::fmt::Display for EccMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EccMethod::Series => write!(f, "series"),
            EccMethod::Quadrature => write!(f, "quadrature"),
            EccMethod::MonteCarlo => write!(f, "monte_carlo"),
        }
    }
}

/// One evaluated grid point; failures are carried, not dropped.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurvePoint {
    pub gamma_bar_db: f64,
    pub ecc: Option<f64>,
    pub error: Option<String>,
    pub method: EccMethod,
    pub terms_used: usize,
    pub perturbed: bool,
    pub truncation_estimate: f64,
    /// Standard error when the point came from sampling.
    pub mc_standard_error: Option<f64>,
}

/// Capacity over a grid of average-SNR points for one model.
#[derive(Debug, Clone)]
pub struct CapacityCurve {
    pub model: ProductModel,
    pub bandwidth: f64,
    pub points: Vec<CurvePoint>,
}

impl CapacityCurve {
    /// The curve's values, failing on the first marked point.
    pub fn values(&self) -> Result<Vec<f64>> {
        self.points
            .iter()
            .map(|p| {
                p.ecc.ok_or_else(|| {
                    Error::Quadrature(format!(
                        "capacity point at {} dB failed: {}",
                        p.gamma_bar_db,
                        p.error.as_deref().unwrap_or("unknown")
                    ))
                })
            })
            .collect()
    }
}

/// Evaluate the capacity on a dB grid with the chosen method.
///
/// Grid points run concurrently; output order follows the grid regardless of
/// completion order.  Monte Carlo draws one deterministic sample set and
/// reuses it across the grid.
pub fn capacity_curve(
    model: &ProductModel,
    db_grid: &[f64],
    bandwidth: f64,
    method: EccMethod,
    mc: Option<&McConfig>,
) -> Result<CapacityCurve> {
    if db_grid.is_empty() {
        return Err(Error::Domain("capacity grid must be nonempty".into()));
    }
    if !(bandwidth > 0.0) {
        return Err(Error::Domain(format!(
            "bandwidth must be positive, got {bandwidth}"
        )));
    }

    let mc_samples = if method == EccMethod::MonteCarlo {
        let cfg = mc.copied().unwrap_or_default();
        let omega = model.moment_quadrature(2.0)?;
        Some((sample_product(model, &cfg)?, omega))
    } else {
        None
    };

    let points: Vec<CurvePoint> = db_grid
        .par_iter()
        .map(|&db| {
            let fail = |e: Error| CurvePoint {
                gamma_bar_db: db,
                ecc: None,
                error: Some(e.to_string()),
                method,
                terms_used: 0,
                perturbed: false,
                truncation_estimate: f64::NAN,
                mc_standard_error: None,
            };
            let point = match SnrPoint::from_db(db, bandwidth) {
                Ok(p) => p,
                Err(e) => return fail(e),
            };
            match method {
                EccMethod::Quadrature => match ecc_quadrature(model, &point) {
                    Ok(v) => CurvePoint {
                        gamma_bar_db: db,
                        ecc: Some(v),
                        error: None,
                        method,
                        terms_used: 0,
                        perturbed: false,
                        truncation_estimate: 0.0,
                        mc_standard_error: None,
                    },
                    Err(e) => fail(e),
                },
                EccMethod::Series => match ecc_series(model, &point, DEFAULT_SPLIT) {
                    Ok(r) => CurvePoint {
                        gamma_bar_db: db,
                        ecc: Some(r.value),
                        error: None,
                        method,
                        terms_used: r.terms_used,
                        perturbed: r.perturbed,
                        truncation_estimate: r.truncation_estimate,
                        mc_standard_error: None,
                    },
                    Err(e) => fail(e),
                },
                EccMethod::MonteCarlo => {
                    let (samples, omega) = mc_samples.as_ref().expect("sampled above");
                    let (mean, se) = mean_log1p_snr(samples, point.gamma_bar / omega);
                    let factor = bandwidth / std::f64::consts::LN_2;
                    CurvePoint {
                        gamma_bar_db: db,
                        ecc: Some(factor * mean),
                        error: None,
                        method,
                        terms_used: samples.len(),
                        perturbed: false,
                        truncation_estimate: 0.0,
                        mc_standard_error: Some(factor * se),
                    }
                }
            }
        })
        .collect();

    Ok(CapacityCurve {
        model: *model,
        bandwidth,
        points,
    })
}
