//! Error type shared by every module of the crate.

use thiserror::Error;

/// Failure modes reported by samplers, planners and numerical kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not symmetric (asymmetry {asymmetry:e})")]
    NonSymmetric { asymmetry: f64 },

    #[error("Gram matrix sum of A_i^T A_i is not positive definite")]
    SingularGram,

    #[error("model has no strong convexity (m_U = {m_u:e})")]
    SingularModel { m_u: f64 },

    #[error("potential is not strongly convex and no regularizer was supplied")]
    NotStronglyConvex,

    #[error("potential {factor} is not smooth (M = infinity)")]
    NotSmooth { factor: usize },

    #[error("model is not centered at its minimizer (max gradient norm {max_gradient:e})")]
    NotCentered { max_gradient: f64 },

    #[error("epsilon {epsilon} is outside (0, 1]")]
    EpsilonOutOfRange { epsilon: f64 },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("iteration did not converge after {iterations} steps (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("adaptive quadrature failed (estimated error {error_estimate:e})")]
    QuadratureFailure { error_estimate: f64 },

    #[error("rejection sampler stalled after {proposals} proposals")]
    AcceptanceStall { proposals: u64 },

    #[error("too few samples: {found} for {required} required")]
    TooFewSamples { found: usize, required: usize },

    #[error("unsupported model: {0}")]
    UnsupportedModel(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for violations of a stated validity predicate, as opposed to
    /// numerical breakdowns.
    pub fn is_validity_violation(&self) -> bool {
        matches!(
            self,
            Error::SingularModel { .. }
                | Error::NotStronglyConvex
                | Error::NotSmooth { .. }
                | Error::NotCentered { .. }
                | Error::EpsilonOutOfRange { .. }
                | Error::InvalidParameter { .. }
                | Error::DimensionMismatch { .. }
                | Error::NonSymmetric { .. }
                | Error::SingularGram
                | Error::UnsupportedModel(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}

pub(crate) fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon <= 1.0 {
        Ok(())
    } else {
        Err(Error::EpsilonOutOfRange { epsilon })
    }
}
