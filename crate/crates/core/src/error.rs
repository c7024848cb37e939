use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("insufficient bits: window at offset {offset} of width {width} needs {needed} bits, stream holds {available}")]
    InsufficientBits {
        offset: usize,
        width: u32,
        needed: usize,
        available: usize,
    },

    #[error("invalid window width {0}: must be in 1..=53")]
    InvalidWidth(u32),

    #[error("insufficient digits: window of width {width} cannot index a level-{level} step function")]
    InsufficientDigits { width: u32, level: u32 },

    #[error("invalid level {0}: must be in 1..={max}", max = crate::functions::MAX_LEVEL)]
    InvalidLevel(u32),

    #[error("step function of level {level} needs {expected} values, got {got}")]
    ValueCount {
        level: u32,
        expected: usize,
        got: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid decay envelope: M = {m}, beta = {beta} (need M > 0 and beta > 1/2)")]
    InvalidEnvelope { m: f64, beta: f64 },

    #[error("coefficient a_{index} = {value} violates the decay envelope |a_m| < {bound}")]
    DecayViolation { index: usize, value: f64, bound: f64 },

    #[error("a Fourier function needs at least one coefficient")]
    NoCoefficients,

    #[error("moment order {0} not supported (expected 1, 2, 3 or 4)")]
    MomentOrder(u32),

    #[error("step function is not centered (mean {0})")]
    NotCentered(f64),

    #[error("degenerate function: the Birkhoff sum has zero variance")]
    Degenerate,

    #[error("enumeration over 2^{0} bit patterns exceeds the cap of 2^{max}", max = crate::exact_stats::MAX_ENUMERATION_BITS)]
    EnumerationTooLarge(u32),

    #[error("horizon must be at least 1")]
    ZeroHorizon,

    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("empty sample")]
    EmptySample,

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("{0} requires a step function")]
    RequiresStep(&'static str),

    #[error("{0} requires a Fourier function")]
    RequiresFourier(&'static str),

    #[error("every projection level is degenerate")]
    AllLevelsDegenerate,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
