use thiserror::Error;

/// Everything that can go wrong in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square: row {row} has {len} entries, expected {expected}")]
    NotSquare {
        row: usize,
        len: usize,
        expected: usize,
    },
    #[error("{labels} labels given for a {side}x{side} matrix")]
    LabelCount { labels: usize, side: usize },
    #[error("empty point set")]
    EmptySpace,
    #[error("entry ({i}, {j}) is not finite")]
    NonFiniteEntry { i: usize, j: usize },
    #[error("matrix is not symmetric at ({i}, {j}): {a} vs {b}")]
    AsymmetricMatrix { i: usize, j: usize, a: f64, b: f64 },
    #[error("nonzero diagonal entry at {i}: {value}")]
    NonzeroDiagonal { i: usize, value: f64 },
    #[error("off-diagonal entry ({i}, {j}) is not positive: {value}")]
    NonpositiveOffDiagonal { i: usize, j: usize, value: f64 },
    #[error("zero off-diagonal entry ({i}, {j}) would merge points")]
    ZeroOffDiagonal { i: usize, j: usize },
    #[error("triangle inequality fails: d({i},{j}) = {dij} > d({i},{k}) + d({k},{j}) = {bound}")]
    TriangleViolation {
        i: usize,
        j: usize,
        k: usize,
        dij: f64,
        bound: f64,
    },
    #[error(
        "strong triangle inequality fails: d({i},{j}) = {dij} > max(d({i},{k}), d({k},{j})) = {bound}"
    )]
    StrongTriangleViolation {
        i: usize,
        j: usize,
        k: usize,
        dij: f64,
        bound: f64,
    },
    #[error("negative tolerance {0}")]
    NegativeTolerance(f64),
    #[error("index {index} out of range for {len} points")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("empty index set")]
    EmptySubset,
    #[error("separation is undefined for a single point")]
    SeparationUndefined,
    #[error("label lists differ")]
    LabelMismatch,
    #[error("expected an ultrametric-flavored space")]
    NotUltrametric,
    #[error("value {value} is not in the range set")]
    ValueOutsideRangeSet { value: f64 },
    #[error("invalid range set: {0}")]
    InvalidRangeSet(String),
    #[error("space has a single point")]
    DegenerateSpace,
    #[error("beta must be positive, got {0}")]
    BadExponent(f64),
    #[error("scale cutoff {r_min} outside (0, {diameter})")]
    BadScaleCutoff { r_min: f64, diameter: f64 },
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("piece {piece} metric does not live on the points of the piece")]
    PieceMismatch { piece: usize },
    #[error("values are not {lipschitz}-Lipschitz on the subset at ({a}, {b})")]
    NotLipschitzOnSubset { a: usize, b: usize, lipschitz: f64 },
    #[error("value vectors have inconsistent dimensions")]
    DimensionMismatch,
    #[error("epsilon must be positive, got {0}")]
    BadEpsilon(f64),
    #[error("need at least two points, got {0}")]
    TooFewPoints(usize),
    #[error("binary strings differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("invalid binary digit {0:?}")]
    InvalidDigit(char),
    #[error("depth {0} is outside the supported range")]
    BadDepth(usize),
    #[error("sequence is not strictly decreasing and positive at index {0}")]
    NotShrinking(usize),
    #[error("sequence violates its envelope at index {0}")]
    EnvelopeViolation(usize),
    #[error("invalid envelope: {0}")]
    InvalidEnvelope(String),
    #[error("sequence has {len} values but depth {depth} was requested")]
    SequenceTooShort { len: usize, depth: usize },
    #[error("shift {shift} is not below sequence length {len}")]
    ShiftTooLarge { shift: usize, len: usize },
    #[error("window {n} for base {base} misses the range set")]
    WindowMiss { n: usize, base: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("recipe {recipe} missed its target at depth {depth}: measured {measured:?}")]
    GenerationFailed {
        recipe: String,
        depth: usize,
        measured: [bool; 3],
    },
    #[error("i/o: {0}")]
    Io(String),
    #[error("json: {0}")]
    Json(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
