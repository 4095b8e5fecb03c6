use serde::{Deserialize, Serialize};

/// A numerical value together with convergence diagnostics.
///
/// Every series engine in this crate reports how hard it had to work:
/// how many outer terms were summed, an absolute estimate of the truncated
/// tail, and whether the shadowing cluster parameter had to be nudged off a
/// gamma pole before the series became evaluable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub value: f64,
    /// Outer terms summed (inner hypergeometric terms are not counted here).
    pub terms_used: usize,
    /// Absolute estimate of the truncated tail.
    pub truncation_estimate: f64,
    /// True when the evaluation ran with a perturbed cluster parameter.
    pub perturbed: bool,
    /// True when the tail estimate dropped below the relative tolerance.
    pub converged: bool,
}
