use thiserror::Error;

/// Errors raised by the interval estimators and their oracles.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum IdmError {
    #[error("count vector must have at least one category")]
    EmptyCounts,

    #[error("hyperparameter s must be positive and finite (got {0})")]
    InvalidHyperparameter(f64),

    #[error("invalid prior weight vector: {0}")]
    InvalidWeights(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{func}: argument {arg} outside the domain")]
    Domain { func: &'static str, arg: f64 },

    #[error("function is not certified concave; use the conservative or oracle routes")]
    NotConcave,

    #[error("product propagation needs nonnegative factors with nonnegative partials")]
    NotNonnegative,

    #[error("propagation coefficient must be nonnegative (got {0})")]
    NegativeCoefficient(f64),

    #[error("derivative bounds at index {index} are inverted: {lower} > {upper}")]
    InvertedBounds { index: usize, lower: f64, upper: f64 },

    #[error("inverted interval: lower {lower} > upper {upper}")]
    InvertedInterval { lower: f64, upper: f64 },

    #[error("grid step {0} must lie in (0, 0.5] and divide 1")]
    InvalidGridStep(f64),

    #[error("grid has {points} points, above the cap of {cap}")]
    GridTooLarge { points: u128, cap: u64 },

    #[error("coverage level must lie in (0, 1) (got {0})")]
    InvalidAlpha(f64),

    #[error("need at least {needed} samples, got {found}")]
    TooFewSamples { needed: usize, found: usize },

    #[error("samples must be sorted ascending")]
    UnsortedSamples,

    #[error("Dirichlet parameters must be positive (got {0})")]
    InvalidDirichlet(f64),

    #[error("set of prior weight vectors is empty")]
    EmptyPriorSet,

    #[error("standard deviation must be nonnegative (got {0})")]
    NegativeSigma(f64),

    #[error("contingency table is empty")]
    EmptyTable,

    #[error("contingency table is ragged: row {row} has {found} cells, expected {expected}")]
    RaggedTable { row: usize, expected: usize, found: usize },

    #[error("cell ({row}, {col}) outside a {rows}x{cols} table")]
    CellOutOfRange { row: usize, col: usize, rows: usize, cols: usize },
}

pub type Result<T> = std::result::Result<T, IdmError>;
