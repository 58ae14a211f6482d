use thiserror::Error;

pub type Result<T> = std::result::Result<T, McbError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum McbError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("column {0} has zero variance")]
    ConstantColumn(usize),

    #[error("design submatrix is numerically rank deficient")]
    RankDeficient,

    #[error("coordinate descent did not converge within {0} sweeps")]
    NoConvergence(usize),

    #[error("cross-validation fold {fold} has only {size} observations")]
    FoldTooSmall { fold: usize, size: usize },

    #[error("bootstrap replicate {0} failed after retries")]
    ReplicateFailed(usize),

    #[error("lower bound model is not a subset of the upper bound model")]
    NotNested,

    #[error("exhaustive search supports at most {limit} predictors, got {p}")]
    TooLarge { p: usize, limit: usize },

    #[error("confidence set width {width} exceeds enumeration guard {limit}")]
    WidthTooLarge { width: usize, limit: usize },

    #[error("confidence set enumeration supports at most {limit} predictors, got {p}")]
    TooManyPredictors { p: usize, limit: usize },

    #[error("ambient dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("simulation repetition {rep} failed: {source}")]
    RepFailed {
        rep: usize,
        #[source]
        source: Box<McbError>,
    },

    #[error("column '{0}' not found in input header")]
    MissingColumn(String),

    #[error("csv error: {0}")]
    Csv(String),

    #[error("io error: {0}")]
    Io(String),
}

impl McbError {
    /// True for failures caused by the numerics rather than by bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            McbError::RankDeficient
            | McbError::NoConvergence(_)
            | McbError::ReplicateFailed(_)
            | McbError::ConstantColumn(_) => true,
            McbError::RepFailed { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

impl From<std::io::Error> for McbError {
    fn from(e: std::io::Error) -> Self {
        McbError::Io(e.to_string())
    }
}
