use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("radius {radius} outside [{lo}, {hi}]")]
    RadiusOutOfRange { radius: f64, lo: f64, hi: f64 },

    #[error("trace has {found} samples, at least {needed} required")]
    TooFewSamples { found: usize, needed: usize },

    #[error("trace is missing the `{0}` column")]
    MissingColumn(&'static str),

    #[error("malformed trace: {0}")]
    MalformedTrace(String),

    #[error("sign pattern of G is inconsistent with an increasing G (positive at r = {pos_at}, negative at r = {neg_at})")]
    NonMonotoneSign { pos_at: f64, neg_at: f64 },

    #[error("interval [{s}, {r}] straddles the threshold radius {r2}")]
    StraddlesThreshold { s: f64, r: f64, r2: f64 },

    #[error("insufficient dynamic range: {0}")]
    InsufficientRange(String),

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("step {step} is below the grid spacing {spacing}")]
    StepUnderflow { step: f64, spacing: f64 },

    #[error("spectral gap violated: mode with eigenvalue {lambda} does not exceed {threshold}")]
    SpectralGap { lambda: f64, threshold: f64 },

    #[error("profile assertion failed: {0}")]
    ProfileAssertion(String),

    #[error("objective is inadmissible: {0}")]
    InadmissibleObjective(String),

    #[error("trace mismatch: {0}")]
    TraceMismatch(String),

    #[error("did not converge: {0}")]
    NonConvergence(String),

    #[error("window violated: {0}")]
    WindowViolated(String),

    #[error("nonnegativity failure: {0}")]
    Nonnegativity(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("schema mismatch: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
