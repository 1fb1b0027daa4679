use crate::martingale::AtomViolation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("radix {radix} at position {position} is below 2")]
    InvalidRadix { position: usize, radix: u32 },

    #[error("scaled base M_{index} overflows 64-bit arithmetic")]
    Overflow { index: usize },

    #[error("cannot parse generator sequence {input:?}: {reason}")]
    ParseGenerators { input: String, reason: String },

    #[error(
        "resolution {requested} exceeds the available depth {available} of the generator sequence"
    )]
    ResolutionUnavailable { requested: usize, available: usize },

    #[error("grid with {size} cells at resolution {resolution} exceeds the cap of {cap} cells")]
    ResolutionOverCap {
        resolution: usize,
        size: u64,
        cap: u64,
    },

    #[error("digit statistics are undefined for n = 0")]
    ZeroIndex,

    #[error("index {n} is out of range (must be at most {max})")]
    IndexOutOfRange { n: u64, max: u64 },

    #[error("mismatched resolutions: {left} vs {right}")]
    ResolutionMismatch { left: usize, right: usize },

    #[error("operands live on different grids")]
    GridMismatch,

    #[error("coordinate {value} at position {position} is not below radix {radix}")]
    CoordinateOutOfRange {
        position: usize,
        value: u32,
        radix: u32,
    },

    #[error("exponent p = {0} is outside the admissible range")]
    InvalidExponent(f64),

    #[error("expected {expected} values, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("the index set is empty")]
    EmptyIndexSet,

    #[error("not a p-atom: {}", describe_violations(.0))]
    NotAnAtom(Vec<AtomViolation>),

    #[error("{condition} fails at k = {failing:?}")]
    GrowthCondition {
        condition: String,
        failing: Vec<usize>,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn describe_violations(v: &[AtomViolation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
