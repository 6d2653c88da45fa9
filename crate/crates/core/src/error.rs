use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("all points coincide; no distinct pair to take a median over")]
    NoDistinctPairs,

    #[error("kernel mismatch: {left} vs {right}")]
    KernelMismatch { left: String, right: String },

    #[error("squared RKHS distance {0:e} is below the numerical floor; kernel is not positive definite on these points")]
    NegativeDistance(f64),

    #[error("function `{function}` is not defined at input indices {indices:?}")]
    Domain {
        function: String,
        indices: Vec<usize>,
    },

    #[error("normalizer {0:e} is too close to zero")]
    DegenerateNormalizer(f64),

    #[error("product grid of {requested} terms exceeds the cap of {cap}; reduce the inputs first")]
    SizeCapExceeded { requested: usize, cap: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("weight {value} at index {index} is not strictly positive")]
    NonPositiveWeight { index: usize, value: f64 },

    #[error("weights sum to {0}, expected 1")]
    WeightsNotNormalized(f64),

    #[error("target size {target} exceeds expansion size {size}")]
    TargetTooLarge { target: usize, size: usize },

    #[error("coefficient system is singular (duplicated expansion points?); use a positive ridge")]
    SingularSystem,

    #[error("design matrix is rank deficient ({rank} < {columns}); use a positive ridge or a lower degree")]
    RankDeficient { rank: usize, columns: usize },

    #[error("bandwidth selection failed: {0}")]
    DegenerateBandwidth(String),

    #[error("too few observations: {actual} (need at least {required})")]
    TooFewObservations { actual: usize, required: usize },

    #[error("serialization: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, Error>;
