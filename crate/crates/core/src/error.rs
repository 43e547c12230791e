use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("improper component: eta2 = {eta2} must be negative")]
    ImproperComponent { eta2: f64 },

    #[error("variance must be positive, got {0}")]
    NonPositiveVariance(f64),

    #[error(
        "integrability violated for component {component}: eta2 + alpha2 = {eta2} + {alpha2} is not negative"
    )]
    Integrability { component: usize, eta2: f64, alpha2: f64 },

    #[error("invalid mixture: {0}")]
    InvalidMixture(String),

    #[error("invalid mechanism: {0}")]
    InvalidMechanism(String),

    #[error("kappa must exceed Q (kappa = {kappa}, Q = {q})")]
    KappaNotAboveQ { kappa: f64, q: f64 },

    #[error("target Q must lie in (0, 1), got {0}")]
    InvalidTargetQ(f64),

    #[error("non-integrable configuration: {0}")]
    NonIntegrable(String),

    #[error("model validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("prior incompatible with fitted model: {0}")]
    PriorIncompatible(String),

    #[error("data precondition failed: {0}")]
    Data(String),

    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: u64, message: String },

    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config { key: key.into(), message: message.into() }
    }
}
