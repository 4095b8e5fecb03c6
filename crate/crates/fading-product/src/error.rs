use thiserror::Error;

/// Errors shared by the numerical kernels and the front ends.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An argument is outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A gamma factor landed within the pole guard of a nonpositive integer.
    /// The series engines respond by nudging the shadowing cluster parameter.
    #[error("gamma pole guard triggered at argument {argument} (distance {distance:.3e})")]
    Pole { argument: f64, distance: f64 },

    /// A series reached its term limit before the tail bound dropped below
    /// the requested tolerance.
    #[error("series did not converge after {terms} terms (tail estimate {estimate:.3e})")]
    NonConvergence { terms: usize, estimate: f64 },

    /// Adaptive quadrature could not produce a finite result.
    #[error("quadrature failure: {0}")]
    Quadrature(String),

    /// A CDF handed to the goodness-of-fit machinery was not monotone.
    #[error("validation failure: {0}")]
    Validation(String),

    /// A run specification does not validate (CLI exit code 2).
    #[error("invalid run spec: {0}")]
    InvalidSpec(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
