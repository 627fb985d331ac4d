use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("exponent p = {0} must be finite and >= 1")]
    InvalidExponent(f64),
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("brute-force enumeration is limited to N <= {max}, got N = {n}")]
    BruteForceBudget { n: usize, max: usize },
    #[error("increment {0} has a nonzero imaginary part; extrema pruning needs a real path")]
    ComplexIncrement(usize),
    #[error("invalid block partition: {0}")]
    InvalidBlocks(String),
    #[error("interval {0} is outside the admissible range")]
    IntervalOutOfRange(String),
    #[error("interval is empty")]
    EmptyInterval,
    #[error("weight {index} is negative ({value})")]
    NegativeWeight { index: usize, value: f64 },
    #[error("all weights are zero")]
    ZeroMass,
    #[error("system size N = {n} is too small; need N >= {min}")]
    SizeTooSmall { n: usize, min: usize },
    #[error("sample point x = {x} lies on a dyadic breakpoint of resolution 2^-{level}")]
    DyadicBreakpoint { x: f64, level: u32 },
    #[error("sample point x = {0} is outside (0, 1)")]
    PointOutOfRange(f64),
    #[error("sample plan {plan} is not compatible with system {system}")]
    IncompatiblePlan { plan: String, system: String },
    #[error("grid of {len} values does not support level {level}: need a power of two >= 2^{level}")]
    ResolutionMismatch { len: usize, level: u32 },
    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("not a permutation: {0}")]
    NotAPermutation(String),
    #[error("rate function is not nondecreasing at n = {0}")]
    NonMonotoneRate(usize),
    #[error("invalid gauge parameter K = {0}; need K >= 1")]
    InvalidGauge(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("estimated cost {estimate:.3e} elementary steps exceeds the budget of {budget:.0e}; {hint}")]
    Budget { estimate: f64, budget: f64, hint: String },
    #[error("{context}: {source}")]
    Io {
        context: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{context}: {source}")]
    Csv {
        context: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("coefficient file {path}: {message}")]
    CoeffFile { path: PathBuf, message: String },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("nothing to emit: record list is empty")]
    EmptyRecords,
}
