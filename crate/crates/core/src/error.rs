use thiserror::Error;

/// Errors shared by every module in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("negative probability {value} at flat index {index}")]
    NegativeProbability { index: usize, value: f64 },
    #[error("probabilities sum to {sum}, expected 1")]
    NotNormalized { sum: f64 },
    #[error("shape mismatch: expected {expected} entries, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("unknown symbol `{symbol}` for variable `{variable}`")]
    UnknownSymbol { variable: String, symbol: String },
    #[error("conditioning event has zero probability")]
    ZeroProbabilityEvent,
    #[error("factor list does not match the `{variant}` signature: {detail}")]
    FactorSignatureMismatch { variant: String, detail: String },
    #[error("alphabet `{role}` has {size} symbols, above the bound {bound}")]
    CardinalityExceeded {
        role: String,
        size: usize,
        bound: usize,
    },
    #[error("state-output distribution is not decomposable")]
    NotDecomposable,
    #[error("missing first-stage distortion budget")]
    MissingBudget,
    #[error("{what} = {value} is out of range")]
    OutOfRange { what: &'static str, value: f64 },
    #[error("no searched distribution satisfies the distortion budget")]
    InfeasibleBudget,
    #[error("grid needs {points} evaluations, above the {limit} limit")]
    GridTooLarge { points: u128, limit: u128 },
    #[error("computed codebook size is below one codeword: {detail}")]
    RateNonpositive { detail: String },
    #[error("codeword storage needs {symbols} symbols, above the {limit} limit")]
    MemoryGuard { symbols: u128, limit: u128 },
    #[error("sequence lengths differ")]
    LengthMismatch,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("internal consistency failure: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
