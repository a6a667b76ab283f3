use thiserror::Error;

/// Errors raised by the solvers and evaluators in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("quadrature did not converge on [{lo}, {hi}]: estimate {estimate}, error {error}")]
    NonConvergence {
        lo: f64,
        hi: f64,
        estimate: f64,
        error: f64,
    },

    #[error("region cannot be resolved to intervals: {0}")]
    InvalidRegion(String),

    #[error("density has mass where the reference density vanishes (at y = {at})")]
    SupportMismatch { at: f64 },

    #[error("infeasible robustness parameters: {0}")]
    Infeasible(String),

    #[error("solver did not converge after {iterations} iterations: residuals {residuals:?}, last iterate {last:?}")]
    NoConvergence {
        iterations: usize,
        residuals: Vec<f64>,
        last: Vec<f64>,
    },

    #[error("nominal densities are not mirror images (max deviation {deviation:e})")]
    NotSymmetric { deviation: f64 },

    #[error("value {value} outside admissible range [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },

    #[error("no root: {0}")]
    NoRoot(String),

    #[error("moment generating function is not finite at u = {u}")]
    MgfInfinite { u: f64 },

    #[error("sequential test left {mass:e} probability mass undecided after {max_n} steps")]
    TruncationExceeded { mass: f64, max_n: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl Error {
    /// Short kebab-case tag of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NonConvergence { .. } => "non-convergence",
            Error::InvalidRegion(_) => "invalid-region",
            Error::SupportMismatch { .. } => "support-mismatch",
            Error::Infeasible(_) => "infeasible",
            Error::NoConvergence { .. } => "no-convergence",
            Error::NotSymmetric { .. } => "not-symmetric",
            Error::OutOfRange { .. } => "out-of-range",
            Error::NoRoot(_) => "no-root",
            Error::MgfInfinite { .. } => "mgf-infinite",
            Error::TruncationExceeded { .. } => "truncation-exceeded",
            Error::InvalidParameter(_) => "invalid-parameter",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
