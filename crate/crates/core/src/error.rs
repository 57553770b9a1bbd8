use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("trajectory is empty")]
    Empty,
    #[error("timestamps must be strictly increasing (index {index}: {prev} then {next})")]
    NonMonotonicTimestamps { index: usize, prev: f64, next: f64 },
    #[error("mixed object ids in one trajectory: `{first}` and `{other}`")]
    MixedObjectIds { first: String, other: String },
    #[error("non-finite value in track point at index {0}")]
    NonFinite(usize),
    #[error("empty input")]
    EmptyInput,
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("k = {k} exceeds the number of points ({n})")]
    KTooLarge { k: usize, n: usize },
    #[error("every point was labelled noise")]
    AllPointsNoise,
    #[error("no segment reached the minimum length")]
    NoSegments,
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("predictive degrees of freedom not positive for component {component} ({dof})")]
    DofNotPositive { component: usize, dof: f64 },
    #[error("insufficient history: need {needed} points, got {got}")]
    InsufficientHistory { needed: usize, got: usize },
    #[error("all candidate fits failed")]
    AllFitsFailed,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("no test cases")]
    NoTestCases,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("model parse error: {0}")]
    ModelParse(String),
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
