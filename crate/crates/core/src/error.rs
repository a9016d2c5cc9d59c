use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{field}`: {constraint}")]
    InvalidParameter { field: String, constraint: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("singular configuration: {0}")]
    SingularConfiguration(String),

    #[error("unsupported combination: {0}")]
    UnsupportedCombination(String),

    #[error("eigensolver failed to converge on the drift matrix")]
    EigenFailure,

    #[error("resolvent is singular at omega = {omega:.6e} rad/s (marginal eigenfrequency)")]
    ResonanceSingularity { omega: f64 },

    #[error("variance diverges: {0}")]
    DivergentVariance(String),

    #[error("no steady state: {0}")]
    NoSteadyState(String),

    #[error("time step {dt:.3e} s exceeds the stability limit {limit:.3e} s")]
    StepSize { dt: f64, limit: f64 },

    #[error("model mismatch in {quantity}: relative spread {spread:.3e} (worst omega = {worst_omega:.6e} rad/s)")]
    ModelMismatch {
        quantity: String,
        spread: f64,
        worst_omega: f64,
    },

    #[error("quadrature did not converge: estimate {value:.6e} with error {error:.3e}")]
    Quadrature { value: f64, error: f64 },

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn invalid(field: &str, constraint: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.to_string(),
            constraint: constraint.into(),
        }
    }
}
