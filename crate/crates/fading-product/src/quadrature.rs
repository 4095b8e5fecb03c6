//! Adaptive Gauss–Kronrod quadrature plus the log-space transform used for
//! semi-infinite fading integrals.
//!
//! The densities integrated here decay like `exp(-a/y^2 - b y^alpha)` with
//! polynomial prefactors; substituting `y = e^u` maps `(0, inf)` to the real
//! line, turns every endpoint singularity `y^c` (c > -1) into a decaying
//! exponential, and lets the integrand be assembled in log space so the tails
//! neither overflow nor underflow.

use crate::error::{Error, Result};
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

/// Value, error estimate, and cost of one adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
}

// 15-point Kronrod extension of 7-point Gauss, abscissae on [0, 1] side.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_17,
    0.207_784_955_007_898_27,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_69,
    0.279_705_391_489_276_67,
    0.381_830_050_505_118_94,
    0.417_959_183_673_469_4,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let fsum = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * fsum;
        if j % 2 == 1 {
            gauss += WG[j / 2] * fsum;
        }
    }
    kronrod *= half;
    gauss *= half;
    (kronrod, (kronrod - gauss).abs())
}

struct Interval {
    error: f64,
    a: f64,
    b: f64,
    value: f64,
}

impl PartialEq for Interval {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Interval {}
impl PartialOrd for Interval {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Interval {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .partial_cmp(&other.error)
            .unwrap_or(Ordering::Equal)
    }
}

/// Adaptive Gauss–Kronrod integration of `f` on the finite interval `[a, b]`.
pub fn integrate_adaptive(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    tol_abs: f64,
    tol_rel: f64,
    max_intervals: usize,
) -> Result<QuadResult> {
    let f = &f as &dyn Fn(f64) -> f64;
    let (v, e) = gk15(f, a, b);
    if !v.is_finite() {
        return Err(Error::Quadrature(format!(
            "non-finite integrand on [{a}, {b}]"
        )));
    }
    let mut heap = BinaryHeap::new();
    heap.push(Interval {
        error: e,
        a,
        b,
        value: v,
    });
    let mut total = v;
    let mut total_err = e;
    let mut evals = 15usize;

    while total_err > tol_abs.max(tol_rel * total.abs()) && heap.len() < max_intervals {
        let worst = heap.pop().expect("heap cannot be empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid == worst.a || mid == worst.b {
            // interval at f64 resolution; accept its estimate
            total_err -= worst.error;
            heap.push(Interval {
                error: 0.0,
                ..worst
            });
            continue;
        }
        let (v1, e1) = gk15(f, worst.a, mid);
        let (v2, e2) = gk15(f, mid, worst.b);
        evals += 30;
        if !(v1.is_finite() && v2.is_finite()) {
            return Err(Error::Quadrature(format!(
                "non-finite integrand near [{}, {}]",
                worst.a, worst.b
            )));
        }
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Interval {
            error: e1,
            a: worst.a,
            b: mid,
            value: v1,
        });
        heap.push(Interval {
            error: e2,
            a: mid,
            b: worst.b,
            value: v2,
        });
    }

    Ok(QuadResult {
        value: total,
        abs_error: total_err,
        evaluations: evals,
    })
}

/// How far below the peak of the log-integrand the integration window extends.
const WINDOW_DROP: f64 = 90.0;

/// Integrate a positive integrand over `(0, upper)` given its natural log.
///
/// `ln_f(y)` may return `-inf` where the integrand vanishes. `upper` may be
/// `f64::INFINITY`.  The peak of the log-integrand is located by a coarse
/// scan in `u = ln y`, the window is cut off `WINDOW_DROP` nats below it, and
/// the integral is accumulated on the scaled integrand `exp(L(u) - L_max)`.
pub fn integrate_positive_ln(
    ln_f: impl Fn(f64) -> f64,
    upper: f64,
    tol_rel: f64,
) -> Result<QuadResult> {
    let ln_upper = if upper == f64::INFINITY {
        f64::INFINITY
    } else if upper > 0.0 {
        upper.ln()
    } else {
        return Ok(QuadResult {
            value: 0.0,
            abs_error: 0.0,
            evaluations: 0,
        });
    };

    // log of the u-space integrand, including the Jacobian e^u
    let lg = |u: f64| ln_f(u.exp()) + u;

    // coarse scan for the peak, widening if it sits on a boundary
    let mut lo = -70.0f64;
    let mut hi = ln_upper.min(70.0);
    let mut best_u = f64::NAN;
    let mut best_l = f64::NEG_INFINITY;
    let mut evals = 0usize;
    for _ in 0..8 {
        let n = 560;
        let step = (hi - lo) / n as f64;
        for i in 0..=n {
            let u = lo + step * i as f64;
            let l = lg(u);
            evals += 1;
            if l > best_l {
                best_l = l;
                best_u = u;
            }
        }
        let at_lo = (best_u - lo).abs() < step && lo > -600.0;
        let at_hi = (best_u - hi).abs() < step && ln_upper.is_infinite() && hi < 600.0;
        if at_lo {
            lo -= 120.0;
        }
        if at_hi {
            hi += 120.0;
        }
        if !(at_lo || at_hi) {
            break;
        }
    }
    if !best_l.is_finite() {
        return Ok(QuadResult {
            value: 0.0,
            abs_error: 0.0,
            evaluations: evals,
        });
    }

    // bracket where the log-integrand is within WINDOW_DROP of the peak
    let drop = best_l - WINDOW_DROP;
    let mut a = best_u;
    while lg(a) > drop && a > lo - 240.0 {
        a -= 1.0;
        evals += 1;
    }
    let mut b = best_u;
    let b_cap = ln_upper.min(hi + 240.0);
    while lg(b) > drop && b < b_cap {
        b = (b + 1.0).min(b_cap);
        evals += 1;
        if b == b_cap {
            break;
        }
    }

    let scaled = |u: f64| {
        let l = lg(u);
        if l.is_finite() {
            (l - best_l).exp()
        } else {
            0.0
        }
    };
    let inner = integrate_adaptive(scaled, a, b, 1e-300, tol_rel, 600)?;
    Ok(QuadResult {
        value: inner.value * best_l.exp(),
        abs_error: inner.abs_error * best_l.exp(),
        evaluations: evals + inner.evaluations,
    })
}

/// Nodes and weights of an n-point Gauss–Legendre rule on [-1, 1].
pub(crate) fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0f64, 0.0f64);
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j as f64 + 1.0) * x * p1 - j as f64 * p2) / (j as f64 + 1.0);
            }
            let dp = n as f64 * (x * p0 - p1) / (x * x - 1.0);
            let dx = p0 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                let dp = {
                    let (mut p0, mut p1) = (1.0f64, 0.0f64);
                    for j in 0..n {
                        let p2 = p1;
                        p1 = p0;
                        p0 = ((2.0 * j as f64 + 1.0) * x * p1 - j as f64 * p2) / (j as f64 + 1.0);
                    }
                    n as f64 * (x * p0 - p1) / (x * x - 1.0)
                };
                nodes[i] = -x;
                nodes[n - 1 - i] = x;
                let w = 2.0 / ((1.0 - x * x) * dp * dp);
                weights[i] = w;
                weights[n - 1 - i] = w;
                break;
            }
        }
    }
    (nodes, weights)
}

/// Cached 64-point Gauss–Legendre rule.
pub(crate) fn gl64() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn polynomial_and_oscillatory() {
        let r = integrate_adaptive(|x| x * x, 0.0, 3.0, 0.0, 1e-12, 100).unwrap();
        assert_relative_eq!(r.value, 9.0, max_relative = 1e-13);

        let r = integrate_adaptive(|x| x.sin(), 0.0, std::f64::consts::PI, 0.0, 1e-12, 200).unwrap();
        assert_relative_eq!(r.value, 2.0, max_relative = 1e-12);
    }

    #[test]
    fn endpoint_singularity() {
        // integral of x^-1/2 on (0,1] = 2
        let r = integrate_adaptive(
            |x| if x > 0.0 { x.powf(-0.5) } else { 0.0 },
            0.0,
            1.0,
            0.0,
            1e-10,
            400,
        )
        .unwrap();
        assert_relative_eq!(r.value, 2.0, max_relative = 1e-8);
    }

    #[test]
    fn semiinfinite_gaussianish() {
        // integral of 2 y e^{-y^2} over (0,inf) = 1
        let r = integrate_positive_ln(|y| (2.0 * y).ln() - y * y, f64::INFINITY, 1e-11).unwrap();
        assert_relative_eq!(r.value, 1.0, max_relative = 1e-10);
    }

    #[test]
    fn semiinfinite_gamma_density() {
        // gamma(0.4) density in log form integrates to one despite the
        // integrable singularity at the origin
        let a = 0.4f64;
        let ln_norm = crate::specfun::ln_gamma(a).unwrap();
        let r = integrate_positive_ln(
            |y| (a - 1.0) * y.ln() - y - ln_norm,
            f64::INFINITY,
            1e-11,
        )
        .unwrap();
        assert_relative_eq!(r.value, 1.0, max_relative = 1e-10);
    }

    #[test]
    fn bounded_upper_limit() {
        // integral of e^{-y} on (0, 2)
        let r = integrate_positive_ln(|y| -y, 2.0, 1e-11).unwrap();
        assert_relative_eq!(r.value, 1.0 - (-2.0f64).exp(), max_relative = 1e-10);
    }

    #[test]
    fn far_displaced_peak_is_found() {
        // lognormal-like mass near y = e^20
        let mu = 20.0;
        let r = integrate_positive_ln(
            |y| {
                let u = y.ln();
                -0.5 * (u - mu) * (u - mu) - u - 0.5 * (2.0 * std::f64::consts::PI).ln()
            },
            f64::INFINITY,
            1e-10,
        )
        .unwrap();
        assert_relative_eq!(r.value, 1.0, max_relative = 1e-9);
    }

    #[test]
    fn vanishing_integrand_gives_zero() {
        let r = integrate_positive_ln(|_| f64::NEG_INFINITY, f64::INFINITY, 1e-10).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn gauss_legendre_rule_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(8);
        // degree 15 polynomial x^14 on [-1,1]: exact value 2/15
        let s: f64 = x.iter().zip(&w).map(|(&xi, &wi)| wi * xi.powi(14)).sum();
        assert_relative_eq!(s, 2.0 / 15.0, max_relative = 1e-13);
        let s1: f64 = w.iter().sum();
        assert_abs_diff_eq!(s1, 2.0, epsilon = 1e-13);

        let (x, w) = gl64();
        let s: f64 = x.iter().zip(w).map(|(&xi, &wi)| wi * (3.0 * xi).cos()).sum();
        let exact = 2.0 * (3.0f64).sin() / 3.0;
        assert_relative_eq!(s, exact, max_relative = 1e-13);
    }
}
