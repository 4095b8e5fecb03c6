//! Statistics of the product of two independent fading envelopes: a
//! kappa-mu line-of-sight multipath factor times an alpha-mu non-linear
//! shadowing factor.
//!
//! The crate evaluates the product's PDF and CDF both by exact residue
//! series built on generalized hypergeometric functions and by adaptive
//! quadrature of the defining integral, derives the SNR power density and
//! ergodic channel capacity of the composite channel, and validates every
//! analytic path against an exact Monte Carlo sampler.

pub mod capacity;
pub mod cli;
pub mod distributions;
pub mod figures;
mod error;
mod eval;
pub mod montecarlo;
pub(crate) mod numeric;
pub mod product;
pub mod quadrature;
pub mod specfun;
pub mod validate;

pub use error::{Error, Result};
pub use eval::EvalResult;
