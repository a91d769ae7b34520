use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use crate::corpus::Quarter;

/// Errors produced by the core algorithms.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid quarter '{0}': expected YYYYQn")]
    MalformedQuarter(String),
    #[error("invalid quarter index {0} (must be 1..=4)")]
    InvalidQuarterIndex(u32),
    #[error("review '{0}' has empty text")]
    EmptyText(String),
    #[error("duplicate review id '{0}'")]
    DuplicateId(String),
    #[error("revenue series has a gap: missing {0}")]
    MissingQuarter(Quarter),
    #[error("duplicate quarter {0}")]
    DuplicateQuarter(Quarter),
    #[error("non-positive revenue {value} in {quarter}")]
    NonPositiveRevenue { quarter: Quarter, value: f64 },

    #[error("unknown aspect id '{0}'")]
    UnknownAspect(String),
    #[error("aspect '{0}' has an empty phrase list")]
    EmptyPhrases(String),
    #[error("invalid phrase '{phrase}' for aspect '{aspect}': must have 1 to 5 tokens")]
    InvalidPhrase { aspect: String, phrase: String },

    #[error("valence out of range for '{token}': {value} not in [-4, 4]")]
    ValenceOutOfRange { token: String, value: f64 },
    #[error("invalid heuristic config: {0}")]
    InvalidConfig(&'static str),

    #[error("compound score {0} outside [-1, 1]")]
    CompoundOutOfRange(f64),
    #[error("series too short: need at least {needed} values, got {got}")]
    SeriesTooShort { needed: usize, got: usize },
    #[error("too few rows: need at least {needed}, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("invalid split ratio {train}:{test}")]
    InvalidSplit { train: u32, test: u32 },

    #[error("rank-deficient design: collinear columns {columns:?}")]
    RankDeficient { columns: Vec<String> },
    #[error("missing feature '{0}'")]
    MissingFeature(String),
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),
    #[error("optimizer stalled: damping {lambda:e} exceeded the maximum")]
    Stalled { lambda: f64 },
    #[error("non-finite error during training at epoch {epoch}")]
    NonFinite { epoch: usize },
    #[error("solver did not converge: final KKT violation {violation:e}")]
    NotConverged { violation: f64 },
    #[error("model kind cannot be used this way: {0}")]
    Unsupported(&'static str),

    #[error("length mismatch: {actual} actual vs {predicted} predicted values")]
    LengthMismatch { actual: usize, predicted: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("undefined U for constant/zero series")]
    UndefinedTheilU,

    #[error("{label}: {source}")]
    Labeled {
        label: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn labeled(self, label: impl Into<String>) -> Self {
        Error::Labeled {
            label: label.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
