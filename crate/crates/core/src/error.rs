use std::fmt;

use thiserror::Error;

/// One broken invariant found while validating a model or timeline.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation(pub String);

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {}", join(.0))]
    InvalidModel(Vec<Violation>),

    #[error("invalid timeline: {0}")]
    InvalidTimeline(String),

    #[error("UnknownState: `{0}` is not defined in the model")]
    UnknownState(String),

    #[error("UnknownEventKind: `{0}` is not defined in the model")]
    UnknownEventKind(String),

    #[error("EmptyTrace: trace has no samples")]
    EmptyTrace,

    #[error("invalid trace: {0}")]
    InvalidTrace(String),

    #[error("AmbiguousModel: states `{a}` and `{b}` are {gap} A apart, need more than 2 x hysteresis ({hysteresis} A)")]
    AmbiguousModel {
        a: String,
        b: String,
        gap: f64,
        hysteresis: f64,
    },

    #[error("TooFewObservations: {got} observations for {unknowns} unknowns")]
    TooFewObservations { got: usize, unknowns: usize },

    #[error("RankDeficient: linearly dependent columns [{}]", .columns.join(", "))]
    RankDeficient { columns: Vec<String> },

    #[error("UnknownName: `{0}` was not fitted")]
    UnknownName(String),

    #[error("NonPositiveMeasured: measured energy {0} J must be > 0")]
    NonPositiveMeasured(f64),

    #[error("TooFewSamples: need at least 2 samples, got {0}")]
    TooFewSamples(usize),

    #[error("InfeasibleSchedule: {0}")]
    InfeasibleSchedule(String),

    #[error("OverlappingBursts: {0}")]
    OverlappingBursts(String),

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn parse(context: impl Into<String>, message: impl ToString) -> Self {
        Error::Parse {
            context: context.into(),
            message: message.to_string(),
        }
    }

    /// True for failures reading or writing files, as opposed to bad content.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}

fn join(v: &[Violation]) -> String {
    v.iter().map(|v| v.0.as_str()).collect::<Vec<_>>().join("; ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
