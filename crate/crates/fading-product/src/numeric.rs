//! Internal arithmetic backends for the residue-series engines.
//!
//! The series mix gamma factors of order `exp(±700)` with tiny powers, and at
//! large argument their two residue sums cancel almost exactly (the partial
//! sums grow like `exp(+g)` while the value decays like `exp(-g)`).  The
//! engines are therefore generic over a [`Backend`] with two scalar kinds:
//!
//! * a *parameter* scalar `P` for gamma arguments, hypergeometric parameter
//!   lists and coefficient algebra, and
//! * a *value* scalar `V` for the accumulated terms, which needs the dynamic
//!   range.
//!
//! [`F64Backend`] uses plain `f64` parameters and [`SignedLog`] values; it is
//! the default path and costs about as much as hand-written `f64` code.
//! [`MpBackend`] carries both kinds as MPFR floats at a precision chosen from
//! the observed cancellation depth; parameters are rebuilt in full precision
//! there because per-term parameter rounding is amplified by exactly the
//! cancellation the high-precision pass is meant to survive.

use crate::error::{Error, Result};
use crate::specfun;
use rug::ops::Pow;
use rug::Float;

/// Two-kind arithmetic interface the series cores are generic over.
pub(crate) trait Backend {
    /// Parameter scalar: moderate magnitudes, full relative accuracy needed.
    type P: Clone + std::fmt::Debug;
    /// Value scalar: huge dynamic range, signed accumulation.
    type V: Clone + std::fmt::Debug;

    // parameter algebra
    fn p(&self, x: f64) -> Self::P;
    fn p_add(&self, a: &Self::P, b: &Self::P) -> Self::P;
    fn p_sub(&self, a: &Self::P, b: &Self::P) -> Self::P;
    fn p_mul(&self, a: &Self::P, b: &Self::P) -> Self::P;
    fn p_div(&self, a: &Self::P, b: &Self::P) -> Self::P;
    fn p_neg(&self, a: &Self::P) -> Self::P;
    /// natural log of a positive parameter
    fn p_ln(&self, a: &Self::P) -> Self::P;
    /// ln(1 + a)
    fn p_ln1p(&self, a: &Self::P) -> Self::P;
    fn p_digamma(&self, a: &Self::P) -> Self::P;
    fn p_to_f64(&self, a: &Self::P) -> f64;
    /// integer power of an integer base, exactly
    fn p_pow_u(&self, base: u64, e: u32) -> Self::P;
    /// `a^e` for positive `a` with a moderate result (parameter scale)
    fn p_pow(&self, a: &Self::P, e: &Self::P) -> Self::P;

    // value algebra
    fn v_zero(&self) -> Self::V;
    fn v_one(&self) -> Self::V;
    fn v_from_p(&self, a: &Self::P) -> Self::V;
    fn v_add(&self, a: &Self::V, b: &Self::V) -> Self::V;
    fn v_mul(&self, a: &Self::V, b: &Self::V) -> Self::V;
    fn v_div(&self, a: &Self::V, b: &Self::V) -> Self::V;
    fn v_neg(&self, a: &Self::V) -> Self::V;
    /// `base^e` for a positive parameter base
    fn v_pow(&self, base: &Self::P, e: &Self::P) -> Self::V;
    /// gamma of a parameter; fails inside the pole guard
    fn v_gamma(&self, x: &Self::P) -> Result<Self::V>;
    fn v_ln_abs(&self, a: &Self::V) -> f64;
    fn v_sign(&self, a: &Self::V) -> i8;
    fn v_is_zero(&self, a: &Self::V) -> bool {
        self.v_sign(a) == 0
    }
    fn v_to_f64(&self, a: &Self::V) -> f64;
}

// ---------------------------------------------------------------------------
// Signed-log value representation
// ---------------------------------------------------------------------------

/// A real number stored as `sign * exp(ln_abs)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SignedLog {
    pub ln_abs: f64,
    pub sign: i8,
}

impl SignedLog {
    pub const ZERO: SignedLog = SignedLog {
        ln_abs: f64::NEG_INFINITY,
        sign: 0,
    };

    pub fn new(x: f64) -> Self {
        if x == 0.0 {
            SignedLog::ZERO
        } else {
            SignedLog {
                ln_abs: x.abs().ln(),
                sign: if x > 0.0 { 1 } else { -1 },
            }
        }
    }

    pub fn from_ln(ln_abs: f64, sign: i8) -> Self {
        if sign == 0 || ln_abs == f64::NEG_INFINITY {
            SignedLog::ZERO
        } else {
            SignedLog { ln_abs, sign }
        }
    }

    pub fn value(&self) -> f64 {
        self.sign as f64 * self.ln_abs.exp()
    }

    pub fn add(&self, o: &SignedLog) -> SignedLog {
        if self.sign == 0 {
            return *o;
        }
        if o.sign == 0 {
            return *self;
        }
        let (hi, lo) = if self.ln_abs >= o.ln_abs {
            (self, o)
        } else {
            (o, self)
        };
        let d = lo.ln_abs - hi.ln_abs; // <= 0
        if self.sign == o.sign {
            SignedLog {
                ln_abs: hi.ln_abs + d.exp().ln_1p(),
                sign: hi.sign,
            }
        } else {
            let m = -d.exp_m1(); // 1 - e^d in [0, 1]
            if m == 0.0 {
                SignedLog::ZERO
            } else {
                SignedLog {
                    ln_abs: hi.ln_abs + m.ln(),
                    sign: hi.sign,
                }
            }
        }
    }

    pub fn mul(&self, o: &SignedLog) -> SignedLog {
        let sign = self.sign * o.sign;
        if sign == 0 {
            SignedLog::ZERO
        } else {
            SignedLog {
                ln_abs: self.ln_abs + o.ln_abs,
                sign,
            }
        }
    }
}

/// Fast path: `f64` parameters, signed-log values.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct F64Backend;

impl Backend for F64Backend {
    type P = f64;
    type V = SignedLog;

    fn p(&self, x: f64) -> f64 {
        x
    }
    fn p_add(&self, a: &f64, b: &f64) -> f64 {
        a + b
    }
    fn p_sub(&self, a: &f64, b: &f64) -> f64 {
        a - b
    }
    fn p_mul(&self, a: &f64, b: &f64) -> f64 {
        a * b
    }
    fn p_div(&self, a: &f64, b: &f64) -> f64 {
        a / b
    }
    fn p_neg(&self, a: &f64) -> f64 {
        -a
    }
    fn p_ln(&self, a: &f64) -> f64 {
        a.ln()
    }
    fn p_ln1p(&self, a: &f64) -> f64 {
        a.ln_1p()
    }
    fn p_digamma(&self, a: &f64) -> f64 {
        specfun::digamma(*a)
    }
    fn p_to_f64(&self, a: &f64) -> f64 {
        *a
    }
    fn p_pow_u(&self, base: u64, e: u32) -> f64 {
        (base as f64).powi(e as i32)
    }
    fn p_pow(&self, a: &f64, e: &f64) -> f64 {
        a.powf(*e)
    }

    fn v_zero(&self) -> SignedLog {
        SignedLog::ZERO
    }
    fn v_one(&self) -> SignedLog {
        SignedLog { ln_abs: 0.0, sign: 1 }
    }
    fn v_from_p(&self, a: &f64) -> SignedLog {
        SignedLog::new(*a)
    }
    fn v_add(&self, a: &SignedLog, b: &SignedLog) -> SignedLog {
        a.add(b)
    }
    fn v_mul(&self, a: &SignedLog, b: &SignedLog) -> SignedLog {
        a.mul(b)
    }
    fn v_div(&self, a: &SignedLog, b: &SignedLog) -> SignedLog {
        let sign = a.sign * b.sign;
        if sign == 0 {
            SignedLog::ZERO
        } else {
            SignedLog {
                ln_abs: a.ln_abs - b.ln_abs,
                sign,
            }
        }
    }
    fn v_neg(&self, a: &SignedLog) -> SignedLog {
        SignedLog {
            ln_abs: a.ln_abs,
            sign: -a.sign,
        }
    }
    fn v_pow(&self, base: &f64, e: &f64) -> SignedLog {
        debug_assert!(*base > 0.0, "v_pow needs a positive base, got {base}");
        SignedLog::from_ln(e * base.ln(), 1)
    }
    fn v_gamma(&self, x: &f64) -> Result<SignedLog> {
        let (ln_abs, sign) = specfun::gamma_signed(*x)?;
        Ok(SignedLog::from_ln(ln_abs, sign))
    }
    fn v_ln_abs(&self, a: &SignedLog) -> f64 {
        a.ln_abs
    }
    fn v_sign(&self, a: &SignedLog) -> i8 {
        a.sign
    }
    fn v_to_f64(&self, a: &SignedLog) -> f64 {
        a.value()
    }
}

// ---------------------------------------------------------------------------
// MPFR backend
// ---------------------------------------------------------------------------

/// High-precision path; both scalar kinds are MPFR floats of `prec` bits.
#[derive(Clone, Copy, Debug)]
pub(crate) struct MpBackend {
    pub prec: u32,
}

impl MpBackend {
    pub fn new(prec: u32) -> Self {
        MpBackend { prec }
    }
}

impl Backend for MpBackend {
    type P = Float;
    type V = Float;

    fn p(&self, x: f64) -> Float {
        Float::with_val(self.prec, x)
    }
    fn p_add(&self, a: &Float, b: &Float) -> Float {
        Float::with_val(self.prec, a + b)
    }
    fn p_sub(&self, a: &Float, b: &Float) -> Float {
        Float::with_val(self.prec, a - b)
    }
    fn p_mul(&self, a: &Float, b: &Float) -> Float {
        Float::with_val(self.prec, a * b)
    }
    fn p_div(&self, a: &Float, b: &Float) -> Float {
        Float::with_val(self.prec, a / b)
    }
    fn p_neg(&self, a: &Float) -> Float {
        Float::with_val(self.prec, -a)
    }
    fn p_ln(&self, a: &Float) -> Float {
        Float::with_val(self.prec, a.ln_ref())
    }
    fn p_ln1p(&self, a: &Float) -> Float {
        Float::with_val(self.prec, a.ln_1p_ref())
    }
    fn p_digamma(&self, a: &Float) -> Float {
        Float::with_val(self.prec, a.digamma_ref())
    }
    fn p_to_f64(&self, a: &Float) -> f64 {
        a.to_f64()
    }
    fn p_pow_u(&self, base: u64, e: u32) -> Float {
        Float::with_val(self.prec, Float::with_val(self.prec, base).pow(e))
    }
    fn p_pow(&self, a: &Float, e: &Float) -> Float {
        Float::with_val(self.prec, Pow::pow(a, e))
    }

    fn v_zero(&self) -> Float {
        Float::with_val(self.prec, 0)
    }
    fn v_one(&self) -> Float {
        Float::with_val(self.prec, 1)
    }
    fn v_from_p(&self, a: &Float) -> Float {
        a.clone()
    }
    fn v_add(&self, a: &Float, b: &Float) -> Float {
        Float::with_val(self.prec, a + b)
    }
    fn v_mul(&self, a: &Float, b: &Float) -> Float {
        Float::with_val(self.prec, a * b)
    }
    fn v_div(&self, a: &Float, b: &Float) -> Float {
        Float::with_val(self.prec, a / b)
    }
    fn v_neg(&self, a: &Float) -> Float {
        Float::with_val(self.prec, -a)
    }
    fn v_pow(&self, base: &Float, e: &Float) -> Float {
        debug_assert!(base.is_sign_positive(), "v_pow needs a positive base");
        Float::with_val(self.prec, Pow::pow(base, e))
    }
    fn v_gamma(&self, x: &Float) -> Result<Float> {
        // same pole guard as the f64 backend, so both paths perturb alike
        let xf = x.to_f64();
        let d = specfun::nonpositive_integer_distance(xf);
        if d < specfun::POLE_GUARD {
            return Err(Error::Pole {
                argument: xf,
                distance: d,
            });
        }
        Ok(Float::with_val(self.prec, x.gamma_ref()))
    }
    fn v_ln_abs(&self, a: &Float) -> f64 {
        if a.is_zero() {
            f64::NEG_INFINITY
        } else {
            Float::with_val(64, a.clone().abs().ln_ref()).to_f64()
        }
    }
    fn v_sign(&self, a: &Float) -> i8 {
        if a.is_zero() {
            0
        } else if a.is_sign_negative() {
            -1
        } else {
            1
        }
    }
    fn v_to_f64(&self, a: &Float) -> f64 {
        a.to_f64()
    }
}

/// Running maximum of the log-magnitudes fed into an accumulation; the gap
/// between this and the log-magnitude of the final sum measures how many
/// digits the summation cancelled away.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct CancellationMeter {
    pub max_ln_term: f64,
}

impl CancellationMeter {
    pub fn new() -> Self {
        CancellationMeter {
            max_ln_term: f64::NEG_INFINITY,
        }
    }

    pub fn record(&mut self, ln_abs: f64) {
        if ln_abs > self.max_ln_term {
            self.max_ln_term = ln_abs;
        }
    }

    /// Nats of cancellation relative to a result of log-magnitude `ln_result`.
    pub fn lost_nats(&self, ln_result: f64) -> f64 {
        if self.max_ln_term.is_finite() {
            (self.max_ln_term - ln_result).max(0.0)
        } else {
            0.0
        }
    }
}
