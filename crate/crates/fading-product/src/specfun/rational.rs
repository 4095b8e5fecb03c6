//! Best rational approximation of the shadowing exponent.
//!
//! The residue expansion of the kernel integral only closes into finite sums
//! of hypergeometric terms when `alpha_y / 2` is rational, so the exponent is
//! represented as a coprime ratio `p : q` found by continued fractions.

use crate::error::{Error, Result};

/// Coprime integers `p / q ≈ target`, with the represented value retained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RationalExponent {
    pub p: u64,
    pub q: u64,
    /// The positive real the ratio stands in for. [`Self::ratio`] may differ
    /// from it by at most the approximation error of the denominator bound.
    pub target: f64,
}

impl RationalExponent {
    pub fn ratio(&self) -> f64 {
        self.p as f64 / self.q as f64
    }

    pub fn approximation_error(&self) -> f64 {
        (self.ratio() - self.target).abs()
    }

    /// Decrement rule some prior treatments apply when `p` or `q` is even:
    /// an even `p` becomes `p - 1`, an even `q` becomes `q - 1`, and the
    /// ratio is reduced again.  This changes the represented exponent (it
    /// maps `p/q = 2/1` onto `1/1`), so it is strictly an opt-in
    /// compatibility behavior; the returned target is the new ratio.
    pub fn with_parity_decrement(&self) -> RationalExponent {
        let mut p = self.p;
        let mut q = self.q;
        if p % 2 == 0 && p > 1 {
            p -= 1;
        }
        if q % 2 == 0 && q > 1 {
            q -= 1;
        }
        let g = gcd(p, q);
        let (p, q) = (p / g, q / g);
        RationalExponent {
            p,
            q,
            target: p as f64 / q as f64,
        }
    }
}

pub(crate) fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Best coprime `p/q` with `q <= max_denominator`, by the continued-fraction
/// convergent/semiconvergent construction. Exact whenever the target is a
/// small rational.
pub fn rational_approx(target: f64, max_denominator: u64) -> Result<RationalExponent> {
    if !(target > 0.0) || !target.is_finite() {
        return Err(Error::Domain(format!(
            "rational_approx needs a positive finite target, got {target}"
        )));
    }
    if max_denominator < 1 {
        return Err(Error::Domain("max_denominator must be at least 1".into()));
    }

    // convergents p_k/q_k of the continued fraction expansion
    let (mut p_prev, mut q_prev) = (1u64, 0u64);
    let (mut p_cur, mut q_cur) = (target.floor() as u64, 1u64);
    let mut candidates: Vec<(u64, u64)> = vec![(p_cur.max(1), 1)];
    let mut frac = target - target.floor();

    for _ in 0..64 {
        if q_cur > max_denominator {
            break;
        }
        candidates.push((p_cur, q_cur));
        if frac == 0.0 {
            break;
        }
        let inv = 1.0 / frac;
        let a = inv.floor();
        frac = inv - a;
        if a >= u64::MAX as f64 {
            break;
        }
        let a = a as u64;

        // next convergent
        let p_next = match a.checked_mul(p_cur).and_then(|v| v.checked_add(p_prev)) {
            Some(v) => v,
            None => break,
        };
        let q_next = match a.checked_mul(q_cur).and_then(|v| v.checked_add(q_prev)) {
            Some(v) => v,
            None => break,
        };

        if q_next > max_denominator {
            // best admissible semiconvergent of this step
            let t = (max_denominator - q_prev) / q_cur;
            if t > 0 {
                candidates.push((p_prev + t * p_cur, q_prev + t * q_cur));
            }
            break;
        }
        (p_prev, q_prev) = (p_cur, q_cur);
        (p_cur, q_cur) = (p_next, q_next);
    }

    let (p, q) = candidates
        .into_iter()
        .filter(|&(p, q)| q >= 1 && q <= max_denominator && p >= 1)
        .min_by(|&(pa, qa), &(pb, qb)| {
            let ea = (pa as f64 / qa as f64 - target).abs();
            let eb = (pb as f64 / qb as f64 - target).abs();
            ea.partial_cmp(&eb).unwrap().then(qa.cmp(&qb))
        })
        .unwrap_or((1, 1));

    let g = gcd(p, q);
    Ok(RationalExponent {
        p: p / g,
        q: q / g,
        target,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_rationals() {
        let r = rational_approx(1.0, 100).unwrap();
        assert_eq!((r.p, r.q), (1, 1));
        let r = rational_approx(3.0, 100).unwrap();
        assert_eq!((r.p, r.q), (3, 1));
        let r = rational_approx(1.5, 100).unwrap();
        assert_eq!((r.p, r.q), (3, 2));
        let r = rational_approx(2.0, 64).unwrap();
        assert_eq!((r.p, r.q), (2, 1));
        let r = rational_approx(0.2, 64).unwrap();
        assert_eq!((r.p, r.q), (1, 5));
    }

    #[test]
    fn pi_convergents() {
        let r = rational_approx(std::f64::consts::PI, 7).unwrap();
        assert_eq!((r.p, r.q), (22, 7));
        let r = rational_approx(std::f64::consts::PI, 200).unwrap();
        assert_eq!((r.p, r.q), (355, 113));
    }

    #[test]
    fn parity_decrement_matches_documented_mapping() {
        // alpha_y = 4 -> p/q = 2/1 -> decrement -> 1/1 (i.e. alpha_y = 2)
        let r = rational_approx(2.0, 64).unwrap();
        let d = r.with_parity_decrement();
        assert_eq!((d.p, d.q), (1, 1));
        assert_eq!(d.target, 1.0);
        // odd/odd ratios are untouched
        let r = rational_approx(3.0, 64).unwrap();
        let d = r.with_parity_decrement();
        assert_eq!((d.p, d.q), (3, 1));
        // 3/2 -> q even -> 3/1
        let r = rational_approx(1.5, 64).unwrap();
        let d = r.with_parity_decrement();
        assert_eq!((d.p, d.q), (3, 1));
    }

    #[test]
    fn rejects_bad_targets() {
        assert!(rational_approx(0.0, 10).is_err());
        assert!(rational_approx(-1.0, 10).is_err());
        assert!(rational_approx(f64::INFINITY, 10).is_err());
        assert!(rational_approx(1.0, 0).is_err());
    }

    /// Brute-force best approximation over all denominators up to the bound.
    fn brute_best(target: f64, max_q: u64) -> f64 {
        let mut best = f64::INFINITY;
        for q in 1..=max_q {
            let p = (target * q as f64).round().max(1.0) as u64;
            for cand in [p.saturating_sub(1).max(1), p, p + 1] {
                let e = (cand as f64 / q as f64 - target).abs();
                if e < best {
                    best = e;
                }
            }
        }
        best
    }

    proptest! {
        #[test]
        fn lowest_terms_and_optimal(target in 0.01f64..8.0, max_q in 1u64..200) {
            let r = rational_approx(target, max_q).unwrap();
            prop_assert!(r.q <= max_q);
            prop_assert_eq!(gcd(r.p, r.q), 1);
            let brute = brute_best(target, max_q);
            prop_assert!(r.approximation_error() <= brute + 1e-12,
                "approx {}/{} err {} vs brute {}", r.p, r.q, r.approximation_error(), brute);
        }
    }
}
