use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("integration domain misses {missing_mass:e} of the probability mass")]
    IntegrationDomain { missing_mass: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("absolute continuity violated: {0}")]
    AbsoluteContinuity(String),

    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("capability error: {0}")]
    Capability(String),

    #[error("invalid quadrature: {0}")]
    Quadrature(String),

    #[error("fixed-point iteration did not converge after {iterations} iterations (last step {last_step:e})")]
    Iteration { iterations: usize, last_step: f64, trace: Vec<f64> },

    #[error("contraction violated: estimated factor {lambda} >= 1")]
    ContractionViolation { lambda: f64 },

    #[error("invariant violated: {0}")]
    InvariantViolation(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Stable kebab-case name of the variant, used in reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::IntegrationDomain { .. } => "integration-domain",
            Error::Domain(_) => "domain",
            Error::AbsoluteContinuity(_) => "absolute-continuity",
            Error::Evaluation(_) => "evaluation",
            Error::Capability(_) => "capability",
            Error::Quadrature(_) => "quadrature",
            Error::Iteration { .. } => "iteration",
            Error::ContractionViolation { .. } => "contraction-violation",
            Error::InvariantViolation(_) => "invariant-violation",
        }
    }
}
