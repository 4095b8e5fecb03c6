//! Generalized hypergeometric series pFq.
//!
//! Terms are produced by a running-ratio recurrence and accumulated in
//! (log-magnitude, sign) form, so parameter lists that drive individual terms
//! past the f64 range still sum correctly.  Arguments whose alternating terms
//! dwarf the sum are re-summed on the big-float backend — with the parameter
//! arithmetic also carried in full precision, since parameter rounding is
//! amplified by the same cancellation.

use super::gamma::{nonpositive_integer_distance, POLE_GUARD};
use crate::error::{Error, Result};
use crate::eval::EvalResult;
use crate::numeric::{Backend, CancellationMeter, F64Backend, MpBackend, SignedLog};

/// Parameter lists and argument of a generalized hypergeometric series.
#[derive(Debug, Clone, PartialEq)]
pub struct PfqArgs {
    /// The a-list (numerator parameters), in order.
    pub numerator: Vec<f64>,
    /// The b-list (denominator parameters), in order.
    pub denominator: Vec<f64>,
    pub argument: f64,
}

impl PfqArgs {
    pub fn new(numerator: Vec<f64>, denominator: Vec<f64>, argument: f64) -> Result<Self> {
        let args = PfqArgs {
            numerator,
            denominator,
            argument,
        };
        args.validate()?;
        Ok(args)
    }

    pub fn validate(&self) -> Result<()> {
        for &b in &self.denominator {
            let d = nonpositive_integer_distance(b);
            if d < POLE_GUARD {
                return Err(Error::Pole {
                    argument: b,
                    distance: d,
                });
            }
        }
        let p = self.numerator.len();
        let q = self.denominator.len();
        if p > q + 1 && self.argument != 0.0 {
            return Err(Error::Domain(format!(
                "series {p}F{q} diverges for nonzero argument"
            )));
        }
        if p == q + 1 && self.argument.abs() >= 1.0 {
            return Err(Error::Domain(format!(
                "series {p}F{q} requires |argument| < 1, got {}",
                self.argument
            )));
        }
        Ok(())
    }
}

pub(crate) struct PfqOutcome<V> {
    pub sum: V,
    pub terms: usize,
    /// Log of the absolute estimate of the truncated tail.
    pub tail_ln: f64,
    pub converged: bool,
}

/// Core summation, generic over the arithmetic backend.
///
/// The argument is a backend *value* so magnitudes beyond the f64 range can
/// be fed in; parameters are backend scalars so the high-precision pass is
/// not polluted by f64 parameter rounding.
pub(crate) fn pfq_core<B: Backend>(
    be: &B,
    numerator: &[B::P],
    denominator: &[B::P],
    argument: &B::V,
    term_limit: usize,
    rel_tol: f64,
    meter: &mut CancellationMeter,
) -> PfqOutcome<B::V> {
    let mut term = be.v_one();
    let mut sum = be.v_one();
    meter.record(0.0);

    let mut prev_ln = 0.0f64;
    let mut below_count = 0u32;
    let mut tail_ln = f64::NEG_INFINITY;

    for k in 0..term_limit {
        let kp = be.p(k as f64);
        let mut ratio = be.v_from_p(&be.p_div(&be.p(1.0), &be.p(k as f64 + 1.0)));
        for a in numerator {
            ratio = be.v_mul(&ratio, &be.v_from_p(&be.p_add(a, &kp)));
        }
        for b in denominator {
            ratio = be.v_div(&ratio, &be.v_from_p(&be.p_add(b, &kp)));
        }
        term = be.v_mul(&be.v_mul(&term, &ratio), argument);
        sum = be.v_add(&sum, &term);

        let t_ln = be.v_ln_abs(&term);
        meter.record(t_ln);
        let s_ln = be.v_ln_abs(&sum);

        if be.v_is_zero(&term) {
            // an exactly-zero term (argument 0 or a terminating numerator
            // parameter) ends the series
            return PfqOutcome {
                sum,
                terms: k + 1,
                tail_ln: f64::NEG_INFINITY,
                converged: true,
            };
        }

        // geometric tail bound once the term ratio falls below one
        let ratio_ln = t_ln - prev_ln;
        prev_ln = t_ln;
        if ratio_ln < 0.0 {
            let r = ratio_ln.exp();
            tail_ln = t_ln + (r / (1.0 - r)).ln();
        } else {
            tail_ln = f64::INFINITY;
        }

        if t_ln < s_ln + rel_tol.ln() {
            below_count += 1;
        } else {
            below_count = 0;
        }
        if below_count >= 2 && tail_ln < s_ln + rel_tol.ln() {
            return PfqOutcome {
                sum,
                terms: k + 1,
                tail_ln,
                converged: true,
            };
        }
    }
    PfqOutcome {
        sum,
        terms: term_limit,
        tail_ln,
        converged: false,
    }
}

const PFQ_REL_TOL: f64 = 1e-12;

/// Evaluate a generalized hypergeometric series to relative tolerance 1e-12.
///
/// Raises [`Error::NonConvergence`] if `term_limit` is reached first; callers
/// can raise the limit or fall back to quadrature.
pub fn pfq(args: &PfqArgs, term_limit: usize) -> Result<EvalResult> {
    args.validate()?;
    let be = F64Backend;
    let mut meter = CancellationMeter::new();
    let x = SignedLog::new(args.argument);
    let out = pfq_core(
        &be,
        &args.numerator,
        &args.denominator,
        &x,
        term_limit,
        PFQ_REL_TOL,
        &mut meter,
    );
    if !out.converged {
        return Err(Error::NonConvergence {
            terms: out.terms,
            estimate: out.tail_ln.exp(),
        });
    }
    let lost = meter.lost_nats(out.sum.ln_abs);
    let est_rel_err = lost.exp() * 1e-15;
    if est_rel_err <= 0.05 * PFQ_REL_TOL {
        return Ok(EvalResult {
            value: out.sum.value(),
            terms_used: out.terms,
            truncation_estimate: out.tail_ln.exp(),
            perturbed: false,
            converged: true,
        });
    }

    // cancellation ate too many digits: redo at adequate precision
    let bits = (((lost + 80.0) * std::f64::consts::LOG2_E).ceil() as u32).clamp(128, 8192);
    let be = MpBackend::new(bits);
    let num: Vec<_> = args.numerator.iter().map(|&a| be.p(a)).collect();
    let den: Vec<_> = args.denominator.iter().map(|&b| be.p(b)).collect();
    let x = be.p(args.argument);
    let mut meter = CancellationMeter::new();
    let out = pfq_core(&be, &num, &den, &x, term_limit, PFQ_REL_TOL, &mut meter);
    if !out.converged {
        return Err(Error::NonConvergence {
            terms: out.terms,
            estimate: out.tail_ln.exp(),
        });
    }
    Ok(EvalResult {
        value: be.v_to_f64(&out.sum),
        terms_used: out.terms,
        truncation_estimate: out.tail_ln.exp(),
        perturbed: false,
        converged: true,
    })
}

/// The parameter-list expansion `Ξ(a, b) = b/a, (b+1)/a, ..., (b+a-1)/a`.
pub fn xi_list(a: u32, b: f64) -> Vec<f64> {
    assert!(a >= 1, "xi_list needs a >= 1");
    (0..a).map(|r| (b + r as f64) / a as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    /// Direct extended-window summation used as the independent oracle.
    fn pfq_brute(num: &[f64], den: &[f64], x: f64, terms: usize) -> f64 {
        let mut sum = 0.0f64;
        let mut term = 1.0f64;
        for k in 0..terms {
            if k > 0 {
                let kf = (k - 1) as f64;
                let mut r = x / (kf + 1.0);
                for &a in num {
                    r *= a + kf;
                }
                for &b in den {
                    r /= b + kf;
                }
                term *= r;
            }
            sum += term;
        }
        sum
    }

    #[test]
    fn exponential_series() {
        let args = PfqArgs::new(vec![], vec![], 1.0).unwrap();
        let r = pfq(&args, 1000).unwrap();
        assert_relative_eq!(r.value, std::f64::consts::E, max_relative = 1e-12);
        assert!(r.converged);
    }

    #[test]
    fn cancelling_parameters() {
        // 1F1(1; 1; 2) = e^2
        let args = PfqArgs::new(vec![1.0], vec![1.0], 2.0).unwrap();
        let r = pfq(&args, 1000).unwrap();
        assert_relative_eq!(r.value, (2f64).exp(), max_relative = 1e-12);
    }

    #[test]
    fn one_f_two_against_brute_force() {
        // 1F2(1; 3/2, 2; -1), oracle by direct 300-term summation
        let oracle = pfq_brute(&[1.0], &[1.5, 2.0], -1.0, 300);
        let args = PfqArgs::new(vec![1.0], vec![1.5, 2.0], -1.0).unwrap();
        let r = pfq(&args, 1000).unwrap();
        assert_relative_eq!(r.value, oracle, max_relative = 1e-12);
    }

    #[test]
    fn large_positive_argument() {
        // 0F1(; 1; 400) = I_0(40); both sides in their own representations
        let args = PfqArgs::new(vec![], vec![1.0], 400.0).unwrap();
        let r = pfq(&args, 2000).unwrap();
        let i0 = crate::specfun::bessel_i(0.0, 40.0).unwrap();
        assert_relative_eq!(r.value, i0, max_relative = 1e-11);
    }

    #[test]
    fn deep_alternating_cancellation() {
        // 0F0(-36) = e^-36 loses ~31 digits in f64; the big-float pass
        // must still deliver the advertised tolerance
        let args = PfqArgs::new(vec![], vec![], -36.0).unwrap();
        let r = pfq(&args, 4000).unwrap();
        assert_relative_eq!(r.value, (-36.0f64).exp(), max_relative = 1e-12);
    }

    #[test]
    fn rejects_bad_denominators_and_divergent_shapes() {
        assert!(matches!(
            PfqArgs::new(vec![1.0], vec![-2.0], 0.5),
            Err(Error::Pole { .. })
        ));
        assert!(matches!(
            PfqArgs::new(vec![1.0, 1.0, 1.0], vec![2.0], 0.5),
            Err(Error::Domain(_))
        ));
        // Gauss 2F1 outside the unit disc
        assert!(PfqArgs::new(vec![1.0, 2.0], vec![3.0], 1.5).is_err());
    }

    #[test]
    fn nonconvergence_reported() {
        let args = PfqArgs::new(vec![], vec![], 30.0).unwrap();
        match pfq(&args, 5) {
            Err(Error::NonConvergence { terms, .. }) => assert_eq!(terms, 5),
            other => panic!("expected NonConvergence, got {other:?}"),
        }
    }

    #[test]
    fn xi_list_matches_printed_pattern() {
        assert_eq!(xi_list(1, 2.5), vec![2.5]);
        assert_eq!(xi_list(2, 1.0), vec![0.5, 1.0]);
        let x3 = xi_list(3, 2.0);
        assert_relative_eq!(x3[0], 2.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(x3[1], 1.0, max_relative = 1e-15);
        assert_relative_eq!(x3[2], 4.0 / 3.0, max_relative = 1e-15);
    }

    proptest! {
        #[test]
        fn zero_f_zero_is_exp(x in -10.0f64..10.0) {
            let args = PfqArgs::new(vec![], vec![], x).unwrap();
            let r = pfq(&args, 2000).unwrap();
            prop_assert!((r.value - x.exp()).abs() <= 1e-12 * x.exp().abs().max(1e-300));
        }

        #[test]
        fn xi_list_length_and_spacing(a in 1u32..24, b in -10.0f64..10.0) {
            let xs = xi_list(a, b);
            prop_assert_eq!(xs.len(), a as usize);
            for w in xs.windows(2) {
                prop_assert!((w[1] - w[0] - 1.0 / a as f64).abs() < 1e-12);
            }
        }
    }
}
