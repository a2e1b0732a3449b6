use thiserror::Error;

/// Errors produced by the model, the solvers and the experiment plumbing.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid realization: {0}")]
    InvalidRealization(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("infeasible configuration: {0}")]
    Infeasible(String),

    #[error("quadrature did not converge: estimate {estimate:e}, error {error:e}")]
    Quadrature { estimate: f64, error: f64 },

    #[error("fixed point did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("association enumeration needs {cases} cases (limit {limit}); use Monte Carlo averaging instead")]
    EnumerationTooLarge { cases: f64, limit: f64 },

    #[error("rejection rate {rate:.3} exceeds 0.5 ({rejected} of {trials} trials); ZF antenna limits are too tight for this configuration")]
    ExcessiveRejection {
        rate: f64,
        rejected: usize,
        trials: usize,
    },

    #[error("configuration errors: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
