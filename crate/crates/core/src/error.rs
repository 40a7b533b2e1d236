use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("Schatten exponent must be at least 1, got {0}")]
    InvalidExponent(f64),
    #[error("Ky Fan index must be positive")]
    InvalidKyFanIndex,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("operator tuple is empty")]
    EmptyTuple,
    #[error("unknown operator model `{0}`")]
    UnknownModel(String),
    #[error("dimension {dimension} too small, need at least {required}")]
    DimensionTooSmall { dimension: usize, required: usize },
    #[error("matrix {index} is not hermitian (deviation {deviation:e})")]
    NotHermitian { index: usize, deviation: f64 },
    #[error("window with floor {floor} and cap {cap} is infeasible: {reason}")]
    InfeasibleWindow {
        floor: usize,
        cap: usize,
        reason: &'static str,
    },
    #[error("projection failed certification: {0}")]
    ProjectionFailed(String),
    #[error("monotonization of schedule step {step} failed: {reason}")]
    MonotonizationFailed { step: usize, reason: String },
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("support needs dimension {required} but only {available} is instantiated")]
    SupportExceedsInstantiation { required: usize, available: usize },
    #[error("invalid tail state: {0}")]
    InvalidState(String),
    #[error("limit not detected after {evaluated} terms (last increment {last_delta:e})")]
    NotConverged { evaluated: usize, last_delta: f64 },
    #[error("gauge mismatch: functional uses {expected}, caller passed {found}")]
    GaugeMismatch { expected: String, found: String },
    #[error("operator norm is not exactly computable for this operator: {0}")]
    NotNormable(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
