use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown system `{0}` (expected one of lorenz, rossler, vanderpol, duffing)")]
    UnknownSystem(String),

    #[error("unknown coupled system `{0}` (expected one of vdp-vdp, slowvdp-fastlorenz, fastvdp-slowlorenz)")]
    UnknownCoupledKind(String),

    #[error("parameter `{name}` for {system}: {reason}")]
    InvalidParameter { system: String, name: String, reason: String },

    #[error("frequency ratio must exceed 1, got {0}")]
    DegenerateRatio(f64),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite state at step {step} (t = {time})")]
    Divergence { step: usize, time: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("series too short: {0}")]
    SeriesTooShort(String),

    #[error("infeasible schedule: {0}")]
    InfeasibleSchedule(String),

    #[error("singular value {index} is zero; reduce the rank below {index}")]
    ZeroSingularValue { index: usize },

    #[error("discrete eigenvalue {index} is zero and has no continuous-time logarithm")]
    ZeroEigenvalue { index: usize },

    #[error("slow drift detected in the fast window: {fraction:.3} of the variance lies below the fast band")]
    SlowDrift { fraction: f64 },

    #[error("decomposition failed: {0}")]
    Decomposition(String),

    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV parse error: {0}")]
    Csv(String),
}

impl Error {
    /// Short machine-readable tag for the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::UnknownSystem(_) => "unknown_system",
            Error::UnknownCoupledKind(_) => "unknown_coupled_kind",
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::DegenerateRatio(_) => "degenerate_ratio",
            Error::DimensionMismatch(_) => "dimension_mismatch",
            Error::Divergence { .. } => "divergence",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::SeriesTooShort(_) => "series_too_short",
            Error::InfeasibleSchedule(_) => "infeasible_schedule",
            Error::ZeroSingularValue { .. } => "zero_singular_value",
            Error::ZeroEigenvalue { .. } => "zero_eigenvalue",
            Error::SlowDrift { .. } => "slow_drift",
            Error::Decomposition(_) => "decomposition",
            Error::UnknownExperiment(_) => "unknown_experiment",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
