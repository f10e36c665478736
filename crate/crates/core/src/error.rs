use thiserror::Error;

/// Errors raised by the laboratory. Infinite divergences are values, not errors.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid density{}: {reason}", fmt_record(*.record, .label))]
    InvalidDensity {
        record: Option<usize>,
        label: Option<String>,
        reason: String,
    },

    #[error("invalid prior: {0}")]
    InvalidPrior(String),

    #[error("model family is empty")]
    EmptyFamily,

    #[error("index {index} out of range for family of {len} members")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("no KL projection: every member has infinite divergence from the truth")]
    NoProjection,

    #[error(
        "KL projection is not unique (members {indices:?} tie within {tolerance:e} nats); \
         a unique minimizer is required"
    )]
    ProjectionTie { indices: Vec<usize>, tolerance: f64 },

    #[error("posterior undefined: every member has zero posterior weight")]
    UndefinedPosterior,

    #[error("cannot condition on a set of zero posterior mass")]
    NullConditioning,

    #[error(
        "index {index} cannot be covered: its -log affinity {value} is below the threshold {threshold}"
    )]
    Uncoverable { index: usize, value: f64, threshold: f64 },

    #[error("target of {size} indices exceeds the exact-search limit {max}; use the greedy cover")]
    TargetTooLarge { size: usize, max: usize },

    #[error(
        "exhaustive enumeration of {alphabet}^{n} sequences exceeds the limit; use Monte Carlo mode"
    )]
    EnumerationTooLarge { alphabet: usize, n: usize },

    #[error("KL neighbourhood has zero prior mass; enlarge eps or put prior mass near p*")]
    EmptyNeighborhood,

    #[error("invalid certificate: {0}")]
    InvalidCertificate(String),

    #[error("rate fit undefined: {0}")]
    FitUndefined(String),

    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },
}

fn fmt_record(record: Option<usize>, label: &Option<String>) -> String {
    match (record, label) {
        (Some(i), Some(l)) => format!(" (record {i}, `{l}`)"),
        (Some(i), None) => format!(" (record {i})"),
        (None, Some(l)) => format!(" (`{l}`)"),
        (None, None) => String::new(),
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
