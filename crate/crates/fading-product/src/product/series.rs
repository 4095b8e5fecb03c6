//! Residue-series engines for the product model.
//!
//! The kernel integral
//!
//! `I(s) = ∫₀^∞ t^{(α µy/2) - s - 1} exp(-B₁/t - B₂^{α/2} t^{α/2}) dt`
//!
//! expands, for rational `α/2 = p/q` in lowest terms, into two finite sums of
//! gamma-weighted ₁F_{p+q} values: splitting the Mellin–Barnes residue series
//! over the gamma pole lattices with period `p` (origin series) and period
//! `q` (large-argument series) gives
//!
//! `B₁^s B₂^ν I(s) = (q/p) (B₁B₂)^s Σ_{i<p} [(-1)^i/i!] Γ(µy - (i+s)q/p)
//!                    (B₁B₂)^i ₁F_{p+q}(1; Ξ(q, (i+s)q/p - µy + 1), Ξ(p, i+1); X)
//!                 + (B₁B₂)^ν Σ_{j<q} [(-1)^j/j!] Γ(s - (j+µy)p/q)
//!                    (B₁B₂)^{pj/q} ₁F_{p+q}(1; Ξ(p, (j+µy)p/q - s + 1), Ξ(q, j+1); X)`
//!
//! with `ν = µy p/q` and the common argument `X = (B₁B₂)^p / ((-p)^p (-q)^q)`.
//! The product PDF is the kernel at `s = k + µx` summed over the Bessel index
//! `k`, and the CDF integrates each term in closed form, which turns every
//! ₁F_{p+q} into a ₂F_{p+q+1} and divides by the power of `z`.
//!
//! Everything here is generic over the arithmetic backend.  The signed-log
//! pass measures how many digits the sums cancel; evaluations that lose more
//! than the requested tolerance allows are repeated on the MPFR backend at a
//! precision sized from that measurement and accepted only when two
//! precisions agree.  Truncation depths scale with the backend's precision:
//! under heavy cancellation a tail that is negligible against the largest
//! term is *not* negligible against the result, so the sums must run until
//! terms fall below the arithmetic's own noise floor.

use crate::error::{Error, Result};
use crate::eval::EvalResult;
use crate::numeric::{Backend, CancellationMeter, F64Backend, MpBackend};
use crate::product::{ProductModel, SeriesConfig};
use crate::specfun::{nonpositive_integer_distance, POLE_GUARD};

/// f64 snapshot of everything the series formulas need.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Geom {
    pub kappa_x: f64,
    pub mu_x: f64,
    pub rhat_x: f64,
    pub mu_y: f64,
    pub rhat_y: f64,
    pub p: u64,
    pub q: u64,
}

impl Geom {
    pub fn of(model: &ProductModel, mu_y_eff: f64) -> Geom {
        Geom {
            kappa_x: model.x.kappa,
            mu_x: model.x.mu,
            rhat_x: model.x.r_hat,
            mu_y: mu_y_eff,
            rhat_y: model.y.r_hat,
            p: model.exponent.p,
            q: model.exponent.q,
        }
    }

    /// The shadowing exponent as represented by the rational ratio, `2p/q`.
    pub fn alpha_eff(&self) -> f64 {
        2.0 * self.p as f64 / self.q as f64
    }

    pub fn rho(&self) -> f64 {
        self.p as f64 / self.q as f64
    }

    /// `B₂ = (µy / r̂y^α)^{2/α}` with the effective exponent.
    pub fn b2(&self) -> f64 {
        (self.mu_y / self.rhat_y.powf(self.alpha_eff())).powf(2.0 / self.alpha_eff())
    }

    pub fn m3(&self) -> f64 {
        self.mu_x * (1.0 + self.kappa_x) / (self.rhat_x * self.rhat_x)
    }

    /// Base of the Bessel-index power, `µx² κx (1+κx) / r̂x²`.
    fn k_base(&self) -> f64 {
        self.mu_x * self.mu_x * self.kappa_x * (1.0 + self.kappa_x) / (self.rhat_x * self.rhat_x)
    }
}

/// Effective precision of the active backend, in nats.
fn precision_nats(bits: Option<u32>) -> f64 {
    match bits {
        Some(b) => b as f64 * std::f64::consts::LN_2,
        None => 36.0, // f64 significand
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum SeriesKind {
    Density,
    Distribution,
}

/// Backend-valued constants shared by every term of one evaluation.
struct BlockCtx<B: Backend> {
    mu_y: B::P,
    rho: B::P,
    inv_rho: B::P,
    nu: B::P,
    /// `B₁B₂` (for the PDF/CDF, `m3 b2 z²`).
    w: B::P,
    /// common hypergeometric argument
    xstar: B::V,
    p: u64,
    q: u64,
    pfq_term_limit: usize,
    pfq_rel_tol: f64,
    /// terms this far (in nats) below the largest seen cannot affect the sum
    noise_nats: f64,
}

impl<B: Backend> BlockCtx<B> {
    fn new(be: &B, g: &Geom, w_f64: f64, cfg: &SeriesConfig, bits: Option<u32>) -> Self {
        let pf = be.p(g.p as f64);
        let qf = be.p(g.q as f64);
        let rho = be.p_div(&pf, &qf);
        let mu_y = be.p(g.mu_y);
        let nu = be.p_mul(&rho, &mu_y);
        let w = be.p(w_f64);
        let denom = be.p_mul(&be.p_pow_u(g.p, g.p as u32), &be.p_pow_u(g.q, g.q as u32));
        let mag = be.v_div(&be.v_pow(&w, &pf), &be.v_from_p(&denom));
        let xstar = if (g.p + g.q) % 2 == 1 {
            be.v_neg(&mag)
        } else {
            mag
        };
        let noise_nats = precision_nats(bits);
        let pfq_rel_tol = (cfg.rel_tol * 1e-3).min((-(noise_nats - 12.0)).exp()).max(1e-300);
        BlockCtx {
            mu_y,
            rho: rho.clone(),
            inv_rho: be.p_div(&qf, &pf),
            nu,
            w,
            xstar,
            p: g.p,
            q: g.q,
            pfq_term_limit: cfg.pfq_term_limit,
            pfq_rel_tol,
            noise_nats,
        }
    }
}

/// Ξ(a, b) as backend parameters.
fn xi_params<B: Backend>(be: &B, a: u64, b: &B::P) -> Vec<B::P> {
    let af = be.p(a as f64);
    (0..a)
        .map(|r| be.p_div(&be.p_add(b, &be.p(r as f64)), &af))
        .collect()
}

/// One residue block `(q/p) Σ_{i<p} ... + Σ_{j<q} ...` at exponent `s`.
///
/// For [`SeriesKind::Distribution`] every term carries the closed-form
/// integral weight `1/c` (with `c` the power of `z` it integrates to) and the
/// extra numerator/denominator parameter pair `c/(2p)`, `c/(2p) + 1`.
fn residue_block<B: Backend>(
    be: &B,
    ctx: &BlockCtx<B>,
    s: &B::P,
    kind: SeriesKind,
    scale_ln: f64,
    meter: &mut CancellationMeter,
) -> Result<B::V> {
    let one = be.p(1.0);
    let two = be.p(2.0);
    let two_p = be.p(2.0 * ctx.p as f64);

    // origin series: i = 0..p-1
    let mut sum_a = be.v_zero();
    let mut sign = 1.0f64;
    let mut factorial = be.v_one();
    for i in 0..ctx.p {
        if i > 0 {
            sign = -sign;
            factorial = be.v_mul(&factorial, &be.v_from_p(&be.p(i as f64)));
        }
        let ip = be.p(i as f64);
        let s_plus_i = be.p_add(s, &ip);
        let stepped = be.p_div(&s_plus_i, &ctx.rho);
        let gamma_arg = be.p_sub(&ctx.mu_y, &stepped);
        let gamma = be.v_gamma(&gamma_arg)?;

        let mut den_params = xi_params(be, ctx.q, &be.p_add(&be.p_sub(&stepped, &ctx.mu_y), &one));
        den_params.extend(xi_params(be, ctx.p, &be.p_add(&ip, &one)));
        let mut num_params = vec![one.clone()];

        let mut coef = be.v_mul(&gamma, &be.v_pow(&ctx.w, &s_plus_i));
        coef = be.v_div(&coef, &factorial);
        if sign < 0.0 {
            coef = be.v_neg(&coef);
        }
        if kind == SeriesKind::Distribution {
            let c = be.p_mul(&two, &s_plus_i);
            let extra = be.p_div(&c, &two_p);
            num_params.push(extra.clone());
            den_params.push(be.p_add(&extra, &one));
            coef = be.v_div(&coef, &be.v_from_p(&c));
        }

        let coef_ln = be.v_ln_abs(&coef);
        let hyp = pfq_checked(be, ctx, &num_params, &den_params, scale_ln + coef_ln, meter)?;
        let term = be.v_mul(&coef, &hyp);
        meter.record(scale_ln + be.v_ln_abs(&term));
        sum_a = be.v_add(&sum_a, &term);
    }
    sum_a = be.v_mul(&sum_a, &be.v_from_p(&ctx.inv_rho));

    // large-argument series: j = 0..q-1
    let mut sum_b = be.v_zero();
    let mut sign = 1.0f64;
    let mut factorial = be.v_one();
    for j in 0..ctx.q {
        if j > 0 {
            sign = -sign;
            factorial = be.v_mul(&factorial, &be.v_from_p(&be.p(j as f64)));
        }
        let jp = be.p(j as f64);
        let stepped = be.p_mul(&ctx.rho, &be.p_add(&jp, &ctx.mu_y));
        let gamma_arg = be.p_sub(s, &stepped);
        let gamma = be.v_gamma(&gamma_arg)?;

        let mut den_params = xi_params(be, ctx.p, &be.p_add(&be.p_sub(&stepped, s), &one));
        den_params.extend(xi_params(be, ctx.q, &be.p_add(&jp, &one)));
        let mut num_params = vec![one.clone()];

        // w^{nu + rho j}
        let expo = be.p_add(&ctx.nu, &be.p_mul(&ctx.rho, &jp));
        let mut coef = be.v_mul(&gamma, &be.v_pow(&ctx.w, &expo));
        coef = be.v_div(&coef, &factorial);
        if sign < 0.0 {
            coef = be.v_neg(&coef);
        }
        if kind == SeriesKind::Distribution {
            let c = be.p_mul(&two, &expo);
            let extra = be.p_div(&c, &two_p);
            num_params.push(extra.clone());
            den_params.push(be.p_add(&extra, &one));
            coef = be.v_div(&coef, &be.v_from_p(&c));
        }

        let coef_ln = be.v_ln_abs(&coef);
        let hyp = pfq_checked(be, ctx, &num_params, &den_params, scale_ln + coef_ln, meter)?;
        let term = be.v_mul(&coef, &hyp);
        meter.record(scale_ln + be.v_ln_abs(&term));
        sum_b = be.v_add(&sum_b, &term);
    }

    Ok(be.v_add(&sum_a, &sum_b))
}

fn pfq_checked<B: Backend>(
    be: &B,
    ctx: &BlockCtx<B>,
    num: &[B::P],
    den: &[B::P],
    scale_ln: f64,
    meter: &mut CancellationMeter,
) -> Result<B::V> {
    let mut inner = CancellationMeter::new();
    let out = crate::specfun::pfq_core(
        be,
        num,
        den,
        &ctx.xstar,
        ctx.pfq_term_limit,
        ctx.pfq_rel_tol,
        &mut inner,
    );
    if scale_ln.is_finite() {
        meter.record(scale_ln + inner.max_ln_term);
    }
    if !out.converged {
        return Err(Error::NonConvergence {
            terms: out.terms,
            estimate: out.tail_ln.exp(),
        });
    }
    Ok(out.sum)
}

pub(crate) struct CoreOutcome<V> {
    pub sum: V,
    pub terms: usize,
    pub tail_ln: f64,
    pub converged: bool,
}

/// Normalized kernel `B₁^s B₂^ν I(s)` for a single exponent.
fn kernel_core<B: Backend>(
    be: &B,
    g: &Geom,
    b1: f64,
    b2: f64,
    s: f64,
    cfg: &SeriesConfig,
    bits: Option<u32>,
    meter: &mut CancellationMeter,
) -> Result<B::V> {
    let ctx = BlockCtx::new(be, g, b1 * b2, cfg, bits);
    residue_block(be, &ctx, &be.p(s), SeriesKind::Density, 0.0, meter)
}

/// Prefactor `(A1 M2) M1 / 2` with the kappa-singular powers of `A1` and `M2`
/// combined analytically, and `psi_0`.
fn psi_start<B: Backend>(be: &B, g: &Geom, ctx: &BlockCtx<B>) -> Result<B::V> {
    let mu_x = be.p(g.mu_x);
    let a1m2 = {
        let base = be.v_pow(&be.p(g.mu_x * (1.0 + g.kappa_x)), &mu_x);
        let expf = be.v_pow(&be.p(std::f64::consts::E), &be.p(-g.kappa_x * g.mu_x));
        let rpow = be.v_pow(&be.p(g.rhat_x), &be.p(-(g.mu_x - 1.0)));
        be.v_mul(
            &be.v_mul(&be.v_mul(&base, &expf), &rpow),
            &be.v_from_p(&be.p(2.0)),
        )
    };
    let m1 = {
        let mu_y_pow = be.v_pow(&be.p(g.mu_y), &be.p(g.mu_y));
        let gam = be.v_gamma(&be.p(g.mu_y))?;
        let ry = be.v_pow(&be.p(g.rhat_y), &be.p(-g.alpha_eff() * g.mu_y));
        let rx = be.v_pow(&be.p(g.rhat_x), &be.p(-(g.mu_x + 1.0)));
        let alpha = be.v_from_p(&be.p(g.alpha_eff()));
        be.v_mul(
            &be.v_mul(&be.v_div(&be.v_mul(&alpha, &mu_y_pow), &gam), &ry),
            &rx,
        )
    };
    let prefactor = be.v_div(&be.v_mul(&a1m2, &m1), &be.v_from_p(&be.p(2.0)));

    // psi_0 = prefactor / Gamma(mu_x) * m3^{-mu_x} * b2^{-nu}
    let mut psi = be.v_div(&prefactor, &be.v_gamma(&mu_x)?);
    psi = be.v_mul(&psi, &be.v_pow(&be.p(g.m3()), &be.p_neg(&mu_x)));
    psi = be.v_mul(&psi, &be.v_pow(&be.p(g.b2()), &be.p_neg(&ctx.nu)));
    Ok(psi)
}

/// `psi_k -> psi_{k+1}` recurrence step (call with the index k being left).
fn psi_step<B: Backend>(be: &B, g: &Geom, psi: &B::V, k_next: usize) -> B::V {
    let kf = k_next as f64;
    let s_prev = be.p(kf - 1.0 + g.mu_x);
    let num = be.v_from_p(&be.p(g.k_base()));
    let den = be.v_from_p(&be.p_mul(&be.p(kf), &be.p_mul(&s_prev, &be.p(g.m3()))));
    be.v_mul(psi, &be.v_div(&num, &den))
}

/// PDF or CDF series at `z`, summed over the Bessel index.
pub(crate) fn product_series_core<B: Backend>(
    be: &B,
    g: &Geom,
    z: f64,
    kind: SeriesKind,
    cfg: &SeriesConfig,
    bits: Option<u32>,
    meter: &mut CancellationMeter,
) -> Result<CoreOutcome<B::V>> {
    let w_f64 = g.m3() * g.b2() * z * z;
    let ctx = BlockCtx::new(be, g, w_f64, cfg, bits);
    let mut psi = psi_start(be, g, &ctx)?;
    let single_term = g.k_base() == 0.0; // kappa = 0: only k = 0 survives

    let mut total = be.v_zero();
    let mut below = 0u32;
    let mut terms = 0usize;
    let mut tail_ln = f64::NEG_INFINITY;
    let mut converged = false;
    let mut prev_ln = f64::NEG_INFINITY;

    for k in 0..cfg.k_max {
        if k > 0 {
            psi = psi_step(be, g, &psi, k);
        }
        let sk = be.p(k as f64 + g.mu_x);
        let psi_ln = be.v_ln_abs(&psi);
        let block = residue_block(be, &ctx, &sk, kind, psi_ln, meter)?;
        let contribution = be.v_mul(&psi, &block);
        total = be.v_add(&total, &contribution);
        terms = k + 1;

        let c_ln = be.v_ln_abs(&contribution);
        meter.record(c_ln);
        let t_ln = be.v_ln_abs(&total);

        if single_term {
            converged = true;
            tail_ln = f64::NEG_INFINITY;
            break;
        }

        let ratio = (c_ln - prev_ln).exp();
        prev_ln = c_ln;
        tail_ln = if ratio < 1.0 {
            c_ln + (ratio / (1.0 - ratio)).max(1.0).ln()
        } else {
            c_ln + 1.0
        };

        // three consecutive small terms guard against alternating dips; under
        // cancellation a term small against the current partial sum can still
        // dominate the final value, so it must also sit below the noise floor
        // of the largest term seen
        let small = c_ln < t_ln + cfg.rel_tol.ln()
            && c_ln < meter.max_ln_term - (ctx.noise_nats - 10.0).min(500.0);
        if small {
            below += 1;
        } else {
            below = 0;
        }
        if below >= 3 {
            converged = true;
            break;
        }
    }

    if kind == SeriesKind::Density {
        // every term carried z^{2(...)}; the density itself is sum / z
        total = be.v_div(&total, &be.v_from_p(&be.p(z)));
    }

    Ok(CoreOutcome {
        sum: total,
        terms,
        tail_ln,
        converged,
    })
}

/// Walk the fully-expanded power series of the density,
/// `f_Z(z) = Σ coef · z^{2e-1}`, feeding every `(e, coef)` pair to `sink`.
///
/// Truncation is gauged against powers of `w_ref` (the capacity integrals use
/// the upper integration endpoint): a chain or Bessel block whose gauge falls
/// below the running maximum by the backend's precision depth cannot affect
/// any weighted sum the caller builds.
pub(crate) fn expanded_power_scan<B: Backend>(
    be: &B,
    g: &Geom,
    cfg: &SeriesConfig,
    w_ref: f64,
    bits: Option<u32>,
    meter: &mut CancellationMeter,
    sink: &mut dyn FnMut(&B::P, &B::V),
) -> Result<(usize, bool)> {
    let w_unit = g.m3() * g.b2(); // w at z = 1; chains scale by lambda w^p
    let ctx = BlockCtx::new(be, g, w_unit, cfg, bits);
    let mut psi = psi_start(be, g, &ctx)?;
    let single_term = g.k_base() == 0.0;

    let one = be.p(1.0);
    let ln_wref = w_ref.ln();
    let drop_nats = (ctx.noise_nats - 8.0).min(500.0);
    let mut max_gauge = f64::NEG_INFINITY;

    // lambda = (m3 b2)^p / ((-p)^p (-q)^q): per-step factor of the inner chains
    let lambda = {
        let denom = be.p_mul(&be.p_pow_u(g.p, g.p as u32), &be.p_pow_u(g.q, g.q as u32));
        let mag = be.v_div(&be.v_pow(&ctx.w, &be.p(g.p as f64)), &be.v_from_p(&denom));
        if (g.p + g.q) % 2 == 1 {
            be.v_neg(&mag)
        } else {
            mag
        }
    };
    let p_step = be.p(g.p as f64);

    let mut below_k = 0u32;
    let mut terms = 0usize;
    let mut converged = false;

    for k in 0..cfg.k_max {
        if k > 0 {
            psi = psi_step(be, g, &psi, k);
        }
        let sk = be.p(k as f64 + g.mu_x);
        terms = k + 1;
        let mut k_gauge = f64::NEG_INFINITY;

        // branch bases mirror residue_block, but the hypergeometric series
        // are expanded term by term
        let mut emit_chain = |base: B::V, e0: B::P, den_params: Vec<B::P>| {
            let mut t = base;
            let mut e = e0;
            let mut negligible = 0u32;
            for n in 0..ctx.pfq_term_limit {
                let gauge = be.v_ln_abs(&t) + be.p_to_f64(&e) * ln_wref;
                meter.record(gauge);
                if gauge > k_gauge {
                    k_gauge = gauge;
                }
                if gauge > max_gauge {
                    max_gauge = gauge;
                }
                sink(&e, &t);
                if gauge < max_gauge - drop_nats {
                    negligible += 1;
                    if negligible >= 2 {
                        break;
                    }
                } else {
                    negligible = 0;
                }
                // t_{n+1} = t_n * lambda / prod(L + n)
                let np = be.p(n as f64);
                let mut next = be.v_mul(&t, &lambda);
                for l in &den_params {
                    next = be.v_div(&next, &be.v_from_p(&be.p_add(l, &np)));
                }
                t = next;
                e = be.p_add(&e, &p_step);
            }
        };

        // origin branch
        let mut sign = 1.0f64;
        let mut factorial = be.v_one();
        for i in 0..ctx.p {
            if i > 0 {
                sign = -sign;
                factorial = be.v_mul(&factorial, &be.v_from_p(&be.p(i as f64)));
            }
            let ip = be.p(i as f64);
            let s_plus_i = be.p_add(&sk, &ip);
            let stepped = be.p_div(&s_plus_i, &ctx.rho);
            let gamma = be.v_gamma(&be.p_sub(&ctx.mu_y, &stepped))?;
            let mut den_params =
                xi_params(be, ctx.q, &be.p_add(&be.p_sub(&stepped, &ctx.mu_y), &one));
            den_params.extend(xi_params(be, ctx.p, &be.p_add(&ip, &one)));

            let mut base = be.v_mul(&psi, &be.v_from_p(&ctx.inv_rho));
            base = be.v_mul(&base, &gamma);
            base = be.v_mul(&base, &be.v_pow(&ctx.w, &s_plus_i));
            base = be.v_div(&base, &factorial);
            if sign < 0.0 {
                base = be.v_neg(&base);
            }
            emit_chain(base, s_plus_i, den_params);
        }

        // large-argument branch
        let mut sign = 1.0f64;
        let mut factorial = be.v_one();
        for j in 0..ctx.q {
            if j > 0 {
                sign = -sign;
                factorial = be.v_mul(&factorial, &be.v_from_p(&be.p(j as f64)));
            }
            let jp = be.p(j as f64);
            let stepped = be.p_mul(&ctx.rho, &be.p_add(&jp, &ctx.mu_y));
            let gamma = be.v_gamma(&be.p_sub(&sk, &stepped))?;
            let mut den_params = xi_params(be, ctx.p, &be.p_add(&be.p_sub(&stepped, &sk), &one));
            den_params.extend(xi_params(be, ctx.q, &be.p_add(&jp, &one)));

            let expo = be.p_add(&ctx.nu, &be.p_mul(&ctx.rho, &jp));
            let mut base = be.v_mul(&psi, &gamma);
            base = be.v_mul(&base, &be.v_pow(&ctx.w, &expo));
            base = be.v_div(&base, &factorial);
            if sign < 0.0 {
                base = be.v_neg(&base);
            }
            emit_chain(base, expo, den_params);
        }

        if single_term {
            converged = true;
            break;
        }
        if k_gauge < max_gauge - drop_nats {
            below_k += 1;
            if below_k >= 3 {
                converged = true;
                break;
            }
        } else {
            below_k = 0;
        }
    }

    Ok((terms, converged))
}

// ---------------------------------------------------------------------------
// pole prescan, perturbation and escalation
// ---------------------------------------------------------------------------

/// Smallest distance from any gamma argument or hypergeometric denominator
/// parameter to a nonpositive integer, over the whole index range a series
/// evaluation can touch.
pub(crate) fn min_pole_distance(g: &Geom, k_max: usize, single_s: Option<f64>) -> f64 {
    let rho = g.rho();
    let mut min_d = f64::INFINITY;
    let mut check = |x: f64| {
        let d = nonpositive_integer_distance(x);
        if d < min_d {
            min_d = d;
        }
    };
    let k_hi = if single_s.is_some() || g.kappa_x == 0.0 {
        0
    } else {
        k_max
    };
    for k in 0..=k_hi {
        let s = single_s.unwrap_or(k as f64 + g.mu_x);
        for i in 0..g.p {
            let stepped = (i as f64 + s) / rho;
            check(g.mu_y - stepped);
            for r in 0..g.q {
                check((stepped - g.mu_y + 1.0 + r as f64) / g.q as f64);
            }
        }
        for j in 0..g.q {
            let stepped = rho * (j as f64 + g.mu_y);
            check(s - stepped);
            for r in 0..g.p {
                check((stepped - s + 1.0 + r as f64) / g.p as f64);
            }
        }
    }
    min_d
}

pub(crate) struct EvalOutcome {
    pub value: f64,
    pub terms: usize,
    pub truncation: f64,
    pub converged: bool,
}

/// A series body runnable on any backend (object-safe closures cannot be
/// generic over the backend, so this small trait stands in for one).
pub(crate) trait EvalBody {
    fn run<B: Backend>(
        &self,
        be: &B,
        bits: Option<u32>,
        meter: &mut CancellationMeter,
    ) -> Result<CoreOutcome<B::V>>;
}

/// Run a series evaluation on the f64 backend, escalating to verified
/// big-float passes when cancellation makes the fast result untrustworthy.
///
/// `positive` declares that the true value is strictly positive (densities,
/// distribution functions), which turns a nonpositive fast-path result into
/// an escalation trigger.
pub(crate) fn run_escalated<E: EvalBody>(
    cfg: &SeriesConfig,
    positive: bool,
    eval: E,
) -> Result<EvalOutcome> {
    let be = F64Backend;
    let mut meter = CancellationMeter::new();
    let out = eval.run(&be, None, &mut meter)?;
    let sum_ln = out.sum.ln_abs;
    let lost = meter.lost_nats(sum_ln);
    let bad_sign = positive && out.sum.sign <= 0;
    let est_rel_err = lost.exp() * 5e-15;

    if !bad_sign && est_rel_err <= 0.3 * cfg.rel_tol {
        return Ok(EvalOutcome {
            value: out.sum.value(),
            terms: out.terms,
            truncation: out.tail_ln.exp(),
            converged: out.converged && out.tail_ln <= sum_ln + cfg.rel_tol.ln(),
        });
    }

    // size the precision from the observed cancellation; when the fast sum is
    // pure noise its magnitude is meaningless, so assume the result sits as
    // far below the peak terms as they rise above unit scale
    let target_ln = if bad_sign || !sum_ln.is_finite() {
        -meter.max_ln_term.abs()
    } else {
        sum_ln
    };
    let needed_nats = (meter.max_ln_term - target_ln).max(0.0) - cfg.rel_tol.ln() + 40.0;
    let mut bits = ((needed_nats * std::f64::consts::LOG2_E).ceil() as u32).max(192);

    let mut previous: Option<f64> = None;
    while bits <= cfg.max_precision_bits {
        let be = MpBackend::new(bits);
        let mut meter = CancellationMeter::new();
        let out = eval.run(&be, Some(bits), &mut meter)?;
        let value = be.v_to_f64(&out.sum);
        let ln = be.v_ln_abs(&out.sum);
        let sane = (!positive || value > 0.0)
            && ln.is_finite()
            && bits as f64 * std::f64::consts::LN_2 - meter.lost_nats(ln) + cfg.rel_tol.ln()
                > 10.0;
        if let Some(prev_value) = previous {
            let denom = value.abs().max(f64::MIN_POSITIVE);
            if sane && ((prev_value - value) / denom).abs() <= 0.3 * cfg.rel_tol {
                return Ok(EvalOutcome {
                    value,
                    terms: out.terms,
                    truncation: out.tail_ln.exp(),
                    converged: out.converged && out.tail_ln <= ln + cfg.rel_tol.ln(),
                });
            }
        }
        previous = if sane { Some(value) } else { None };
        // a sane pass only needs a modest cushion to verify against; a failed
        // or disagreeing pass means the sizing was off, so jump
        bits = if previous.is_some() {
            bits + 128
        } else {
            bits.saturating_mul(2)
        };
    }

    Err(Error::NonConvergence {
        terms: 0,
        estimate: f64::NAN,
    })
}

struct ProductBody<'a> {
    geom: Geom,
    z: f64,
    kind: SeriesKind,
    cfg: &'a SeriesConfig,
}

impl EvalBody for ProductBody<'_> {
    fn run<B: Backend>(
        &self,
        be: &B,
        bits: Option<u32>,
        meter: &mut CancellationMeter,
    ) -> Result<CoreOutcome<B::V>> {
        product_series_core(be, &self.geom, self.z, self.kind, self.cfg, bits, meter)
    }
}

struct KernelBody<'a> {
    geom: Geom,
    b1: f64,
    b2: f64,
    s: f64,
    cfg: &'a SeriesConfig,
}

impl EvalBody for KernelBody<'_> {
    fn run<B: Backend>(
        &self,
        be: &B,
        bits: Option<u32>,
        meter: &mut CancellationMeter,
    ) -> Result<CoreOutcome<B::V>> {
        let sum = kernel_core(be, &self.geom, self.b1, self.b2, self.s, self.cfg, bits, meter)?;
        // divide out the normalization to recover the integral itself
        let norm = be.v_mul(
            &be.v_pow(&be.p(self.b1), &be.p(self.s)),
            &be.v_pow(&be.p(self.b2), &be.p(self.geom.rho() * self.geom.mu_y)),
        );
        Ok(CoreOutcome {
            sum: be.v_div(&sum, &norm),
            terms: 1,
            tail_ln: f64::NEG_INFINITY,
            converged: true,
        })
    }
}

/// Kernel integral by its residue series (no perturbation here: gamma poles
/// are reported to the caller).
pub(crate) fn kernel_integral_series_impl(
    g: &Geom,
    b1: f64,
    b2: f64,
    s: f64,
    cfg: &SeriesConfig,
) -> Result<EvalResult> {
    let d = min_pole_distance(g, 0, Some(s));
    if d < POLE_GUARD {
        return Err(Error::Pole {
            argument: s,
            distance: d,
        });
    }
    let out = run_escalated(
        cfg,
        true,
        KernelBody {
            geom: *g,
            b1,
            b2,
            s,
            cfg,
        },
    )?;
    Ok(EvalResult {
        value: out.value,
        terms_used: out.terms,
        truncation_estimate: out.truncation,
        perturbed: false,
        converged: out.converged,
    })
}

/// Choose the effective cluster parameter: the exact one when the lattice is
/// clear of gamma poles, otherwise the smallest nudge that clears them.
pub(crate) fn effective_mu_y(model: &ProductModel) -> Result<(f64, bool)> {
    let cfg = &model.series_cfg;
    let mu_y0 = model.y.mu;
    if min_pole_distance(&Geom::of(model, mu_y0), cfg.k_max, None) >= POLE_GUARD {
        return Ok((mu_y0, false));
    }
    for m in 1..=4u32 {
        let eps = m as f64 * cfg.perturbation_eps;
        if min_pole_distance(&Geom::of(model, mu_y0 + eps), cfg.k_max, None) >= 10.0 * POLE_GUARD {
            return Ok((mu_y0 + eps, true));
        }
    }
    Err(Error::Domain(format!(
        "could not clear gamma poles by perturbing mu_y = {mu_y0}"
    )))
}

/// PDF/CDF series evaluation with the pole-perturbation policy.
pub(crate) fn product_series_eval(
    model: &ProductModel,
    z: f64,
    kind: SeriesKind,
) -> Result<EvalResult> {
    let cfg = &model.series_cfg;
    let mu_y0 = model.y.mu;

    let eval_at = |mu_eff: f64| -> Result<EvalOutcome> {
        run_escalated(
            cfg,
            true,
            ProductBody {
                geom: Geom::of(model, mu_eff),
                z,
                kind,
                cfg,
            },
        )
    };

    let (mu_eff, perturbed) = effective_mu_y(model)?;
    if !perturbed {
        let out = eval_at(mu_eff)?;
        return Ok(EvalResult {
            value: out.value,
            terms_used: out.terms,
            truncation_estimate: out.truncation,
            perturbed: false,
            converged: out.converged,
        });
    }

    let eps = mu_eff - mu_y0;
    let first = eval_at(mu_eff)?;
    let double_ok = cfg.richardson
        && min_pole_distance(&Geom::of(model, mu_y0 + 2.0 * eps), cfg.k_max, None)
            >= 10.0 * POLE_GUARD;
    let (value, terms, truncation, converged) = if double_ok {
        // linear extrapolation of the nudge back to zero
        let second = eval_at(mu_y0 + 2.0 * eps)?;
        (
            2.0 * first.value - second.value,
            first.terms.max(second.terms),
            first.truncation + second.truncation,
            first.converged && second.converged,
        )
    } else {
        (first.value, first.terms, first.truncation, first.converged)
    };

    Ok(EvalResult {
        value,
        terms_used: terms,
        truncation_estimate: truncation,
        perturbed: true,
        converged,
    })
}

/// Density at `z` for an explicit geometry (used by the capacity integrals,
/// which fix the effective cluster parameter once per evaluation).
pub(crate) fn pdf_series_at_geom(g: &Geom, z: f64, cfg: &SeriesConfig) -> Result<EvalOutcome> {
    run_escalated(
        cfg,
        true,
        ProductBody {
            geom: *g,
            z,
            kind: SeriesKind::Density,
            cfg,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{AlphaMuParams, KappaMuParams};
    use crate::numeric::F64Backend;
    use approx::assert_relative_eq;

    /// The expanded scan must reconstruct the density the block engine
    /// computes: f_Z(z) = sum coef z^{2e-1}.
    #[test]
    fn expanded_scan_reconstructs_the_density() {
        for &(kappa, mu1, alpha2, mu2, z) in &[
            (0.7, 1.1, 2.0, 0.9, 1.3),
            (1.1, 1.2, 6.0, 1.3, 0.8),
            (0.0, 2.0, 4.0, 0.9, 1.1),
            (1.5, 2.3, 3.0, 2.7, 0.6),
        ] {
            let x = KappaMuParams::new(kappa, mu1, 1.0).unwrap();
            let y = AlphaMuParams::new(alpha2, mu2, 1.0).unwrap();
            let model = ProductModel::new(x, y).unwrap();
            let g = Geom::of(&model, mu2);
            let cfg = model.series_cfg;
            let be = F64Backend;

            let mut meter = CancellationMeter::new();
            let mut rebuilt = be.v_zero();
            let w = z * z;
            expanded_power_scan(&be, &g, &cfg, w, None, &mut meter, &mut |e, coef| {
                let term = be.v_mul(coef, &be.v_pow(&w, e));
                rebuilt = be.v_add(&rebuilt, &term);
            })
            .unwrap();
            // sum coef (z^2)^e, then divide by z for the density
            let rebuilt = be.v_to_f64(&rebuilt) / z;

            let mut meter = CancellationMeter::new();
            let direct =
                product_series_core(&be, &g, z, SeriesKind::Density, &cfg, None, &mut meter)
                    .unwrap();
            assert_relative_eq!(rebuilt, be.v_to_f64(&direct.sum), max_relative = 1e-9);
        }
    }
}
