use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("singular chart point for {chart}: {reason}")]
    SingularChart { chart: String, reason: String },

    #[error("collision singularity: denominator {denominator} = {value:e} within guard {guard:e}")]
    Singularity {
        denominator: String,
        value: f64,
        guard: f64,
    },

    #[error("chart mismatch: expected {expected}, got {got}")]
    ChartMismatch { expected: String, got: String },

    #[error("incompatible chart {chart} for potential family {family}")]
    IncompatibleChart { chart: String, family: String },

    #[error("non-finite value for {0}")]
    NonFinite(String),

    #[error("sampler exhausted after {attempts} attempts ({accepted} points accepted)")]
    SamplerExhausted { attempts: usize, accepted: usize },

    #[error("empty input: {0}")]
    Empty(String),
}

pub type Result<T> = std::result::Result<T, LabError>;
