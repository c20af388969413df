use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("degenerate kernel: nu*dt = {0:e} is below the delta-limit threshold")]
    DegenerateKernel(f64),

    #[error("kernel is not normalizable: integrated mass {mass}")]
    NonNormalizable { mass: f64 },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("quadrature did not converge: estimate {estimate:e}, error {error:e}")]
    Quadrature { estimate: f64, error: f64 },

    #[error("root finder did not converge: relative residual {residual:e}")]
    NoConvergence { residual: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("missing required key `{0}`")]
    MissingKey(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }
}

impl Error {
    /// Stable snake_case name of the variant, for machine-readable reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::NonFinite(_) => "non_finite",
            Error::GridMismatch(_) => "grid_mismatch",
            Error::DegenerateKernel(_) => "degenerate_kernel",
            Error::NonNormalizable { .. } => "non_normalizable",
            Error::Unsupported(_) => "unsupported",
            Error::Quadrature { .. } => "quadrature",
            Error::NoConvergence { .. } => "no_convergence",
            Error::Config(_) => "config",
            Error::MissingKey(_) => "missing_key",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }

    /// The config key or parameter the error is about, if any.
    pub fn key(&self) -> Option<&str> {
        match self {
            Error::MissingKey(k) => Some(k),
            Error::InvalidParameter { name, .. } => Some(name),
            _ => None,
        }
    }
}
