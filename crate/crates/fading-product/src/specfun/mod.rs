//! Self-contained special-function kernel.
//!
//! Everything the fading statistics need and nothing more: log-gamma, signed
//! gamma on the negative axis, the modified Bessel function of the first kind
//! (and its reduced series), generalized hypergeometric series, the Ξ
//! parameter-list operator, best rational approximation of the shadowing
//! exponent, and regularized incomplete gamma.  All functions are pure.

mod bessel;
mod gamma;
mod pfq;
mod rational;

pub use bessel::{bessel_i, ln_bessel_i_reduced};
pub use gamma::{
    digamma, gamma_signed, gammp, gammq, ln_gamma, nonpositive_integer_distance, POLE_GUARD,
};
pub use pfq::{pfq, xi_list, PfqArgs};
pub(crate) use pfq::pfq_core;
pub use rational::{rational_approx, RationalExponent};
