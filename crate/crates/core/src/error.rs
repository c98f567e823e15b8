//! Error type shared across the toolkit.

use thiserror::Error;

/// Errors raised by preprocessing, identification, and screening routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("no overlap between record time spans")]
    NoOverlap,

    #[error("non-monotonic timestamps after duplicate removal in record {0}")]
    NonMonotonicTimestamps(String),

    #[error("channel index {index} out of range ({channels} channels)")]
    ChannelOutOfRange { index: usize, channels: usize },

    #[error("rotation triads overlap on channel {0}")]
    OverlappingTriads(usize),

    #[error("decimation factor {factor} too large for record of {samples} samples")]
    DecimationFactor { factor: usize, samples: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("frequency band empty after restriction to the spectrum grid")]
    EmptyBand,

    #[error("insufficient correlation lags: need {needed}, have {available}")]
    InsufficientLags { needed: usize, available: usize },

    #[error("truncation {truncation} exceeds numerical rank {rank} of the Hankel matrix")]
    TruncationExceedsRank { truncation: usize, rank: usize },

    #[error("ill-conditioned relocation: {0}")]
    IllConditioned(String),

    #[error("degenerate scaling: |d_sigma| = {0:e} below threshold")]
    DegenerateScaling(f64),

    #[error("rank-deficient least-squares system: {0}")]
    RankDeficient(String),

    #[error("frequency grids do not match: {0}")]
    GridMismatch(String),

    #[error("eigenvalue solver failed: {0}")]
    EigenFailure(String),

    #[error("mode shapes live on different channel sets ({0} vs {1} channels)")]
    ShapeChannelMismatch(usize, usize),

    #[error("zero-length or zero mode shape vector")]
    ZeroShape,

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at {path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("JSON error on {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code class: 2 for data/config problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::IllConditioned(_)
            | Error::DegenerateScaling(_)
            | Error::RankDeficient(_)
            | Error::EigenFailure(_)
            | Error::TruncationExceedsRank { .. } => 3,
            _ => 2,
        }
    }
}
