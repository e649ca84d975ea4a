use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("circles {first} and {second} intersect or nest")]
    CirclesOverlap { first: usize, second: usize },

    #[error("invalid circle: {0}")]
    InvalidCircle(String),

    #[error("a Schottky group needs at least one circle pair")]
    EmptyGroup,

    #[error("generator {generator} does not pair its circles (residual {residual:e})")]
    PairingViolated { generator: usize, residual: f64 },

    #[error("degenerate matrix (determinant {0:e})")]
    DegenerateMatrix(f64),

    #[error("word enumeration would produce {requested} items, cap is {cap}")]
    WordBudgetExceeded { requested: u128, cap: usize },

    #[error("reduction did not reach the fundamental domain after {0} steps")]
    ReductionDepthExceeded(usize),

    #[error("invalid group word: {0}")]
    InvalidWord(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("dilation factor is not finite at sample {index}")]
    NonFiniteFactor { index: usize },

    #[error("time change is constant between samples {index} and {next}", next = index + 1)]
    DegenerateProfile { index: usize },

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("no address bin has enough hits in both measures")]
    NoSharedBins,

    #[error("measures are not comparable: {0}")]
    MismatchedMeasures(String),

    #[error("unsupported field extension: {0}")]
    UnsupportedField(String),

    #[error("cannot parse direction component {0:?}")]
    ParseDirection(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
