use alloc::string::String;

use crate::dataset::Valence;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("{what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("side {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("upsampling from {from} to {to} is not permitted")]
    UpsampleNotPermitted { from: usize, to: usize },
    #[error("image is {width}x{height}, expected a square image")]
    NotSquare { width: usize, height: usize },
    #[error("side {side} is shorter than the filter length {filter_len}")]
    SideTooSmall { side: usize, filter_len: usize },
    #[error("decomposition level {level} outside 1..={max}")]
    LevelOutOfRange { level: usize, max: usize },
    #[error("unsupported wavelet db{0} (db1..db10 are available)")]
    UnknownWavelet(usize),
    #[error("coefficient layout does not match side {side} at level {level}")]
    LayoutMismatch { side: usize, level: usize },
    #[error("invalid measurement count m={m} for n={n}")]
    InvalidMeasurementCount { m: usize, n: usize },
    #[error("l1 radius must be non-negative, got {0}")]
    NegativeRadius(f64),
    #[error("invalid sparsity {k} for m={m}")]
    InvalidSparsity { k: usize, m: usize },
    #[error("active set became singular when adding column {0}")]
    SingularActiveSet(usize),
    #[error("unknown expression code {0:?}")]
    UnknownExpression(String),
    #[error("malformed JAFFE filename {0:?}")]
    MalformedFilename(String),
    #[error("invalid fold count k={k} for n={n}")]
    InvalidFolds { k: usize, n: usize },
    #[error("training set contains a single class")]
    SingleClass,
    #[error("class {0:?} has no samples")]
    MissingClass(Valence),
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
}
