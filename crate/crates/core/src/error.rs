use thiserror::Error;

/// Unified error type for every engine in this crate.
///
/// The CLI maps these onto process exit codes, so variants are kept
/// coarse and stable: one variant per failure class rather than per
/// failure site.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on an argument was violated (bad range, bad combination).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An input exceeds the capacity of a table it must be looked up in.
    #[error("out of range: {0}")]
    OutOfRange(String),

    /// The requested route cannot handle this weight sequence
    /// (signed weights on the generating-function path).
    #[error("unsupported weights: {0}")]
    UnsupportedWeights(String),

    /// A computed value fell below the resolution of the working precision,
    /// so the result would be rounding noise rather than a number.
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),

    /// A cache file failed validation; callers should regenerate.
    #[error("cache corrupt: {0}")]
    CacheCorrupt(String),

    /// A generating-function factor vanished at the requested point.
    #[error("singular evaluation: {0}")]
    SingularEvaluation(String),

    /// The request would exceed a hard resource guard (e.g. exact-arithmetic
    /// coefficient blow-up).
    #[error("resource limit: {0}")]
    ResourceLimit(String),

    /// A weight-spec string failed to parse; `position` is a byte offset
    /// into the original spec string.
    #[error("weight spec parse error at byte {position}: {message}")]
    WeightSpecParse { position: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
