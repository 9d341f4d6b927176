use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("Taylor regime violated: residual broadening needs a nonzero RF Rabi frequency")]
    TaylorRegime,

    #[error("degenerate steady state: Liouvillian null space has dimension {multiplicity}")]
    DegenerateSteadyState { multiplicity: usize },

    #[error("steady state is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPositive { min_eigenvalue: f64 },

    #[error("peak detection found {found} of {requested} requested dips")]
    PeakDetection { found: usize, requested: usize },

    #[error("normal equations stayed singular up to damping {damping:e}")]
    SingularFit { damping: f64 },

    #[error("no spectral sensitivity: slope vanishes on the whole grid")]
    NoSensitivity,

    #[error("model family mismatch: {0}")]
    ModelMismatch(String),

    #[error("config error at {key} (line {line}): {message}")]
    Config { key: String, line: usize, message: String },

    #[error("unknown sweep axis `{0}`")]
    UnknownAxis(String),

    #[error("malformed spectrum data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// Short machine-readable tag used by the CLI and the C ABI.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::TaylorRegime => "taylor_regime",
            Error::DegenerateSteadyState { .. } => "degenerate_steady_state",
            Error::NotPositive { .. } => "not_positive",
            Error::PeakDetection { .. } => "peak_detection",
            Error::SingularFit { .. } => "singular_fit",
            Error::NoSensitivity => "no_sensitivity",
            Error::ModelMismatch(_) => "model_mismatch",
            Error::Config { .. } => "config",
            Error::UnknownAxis(_) => "unknown_axis",
            Error::Format(_) => "format",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}
