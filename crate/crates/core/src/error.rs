use thiserror::Error;

use crate::model::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("model failed validation: {}", format_violations(.0))]
    Validation(Vec<Violation>),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("row {row} has zero sum and cannot be normalized")]
    ZeroRow { row: usize },

    #[error("negative entry {value} at row {row}, column {col}")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("stationary distribution is not unique: {} closed classes {:?}", .classes.len(), .classes)]
    NonUniqueStationary { classes: Vec<Vec<usize>> },

    #[error("did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("observation sequence is empty")]
    EmptySequence,

    #[error("sequence too short: need at least {needed}, got {got}")]
    SequenceTooShort { needed: usize, got: usize },

    #[error(
        "symbol index {index} at position {position} is outside an alphabet of {alphabet} symbols"
    )]
    SymbolOutOfRange {
        index: usize,
        position: usize,
        alphabet: usize,
    },

    #[error("state index {index} at position {position} is outside a space of {states} states")]
    StateOutOfRange {
        index: usize,
        position: usize,
        states: usize,
    },

    #[error("observation sequence has zero probability under the model")]
    ImpossibleSequence,

    #[error("no feasible state path: every path has zero probability")]
    NoFeasiblePath,

    #[error("row {row} of the {matrix} matrix is all zeros")]
    DegenerateRow { matrix: &'static str, row: usize },

    #[error("length must be at least 1")]
    ZeroLength,

    #[error("unsupported rng algorithm {0:?}")]
    UnsupportedRng(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("input contains no data rows")]
    NoData,

    #[error("duplicate date {0}")]
    DuplicateDate(String),

    #[error("line {line}: close value {value} must be positive and finite")]
    NonPositiveClose { line: usize, value: f64 },

    #[error("lag {k} requires more than {k} prices, got {len}")]
    LagTooLarge { k: usize, len: usize },

    #[error("zero difference at position {position} rejected by zero policy")]
    ZeroDifference { position: usize },

    #[error("differences are constant; automatic binning needs spread")]
    ConstantDiffs,

    #[error("thresholds must be 5 strictly ascending finite values, got {0:?}")]
    InvalidThresholds(Vec<f64>),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("need at least {needed} candidate sequences, got {got}")]
    TooFewCandidates { needed: usize, got: usize },

    #[error("unknown label {0:?}")]
    UnknownLabel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of numerical or model-validity nature, as opposed to
    /// malformed input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::Validation(_)
                | Error::ZeroRow { .. }
                | Error::NegativeEntry { .. }
                | Error::NonUniqueStationary { .. }
                | Error::NotConverged { .. }
                | Error::ImpossibleSequence
                | Error::NoFeasiblePath
                | Error::DegenerateRow { .. }
                | Error::ConstantDiffs
        )
    }
}

fn format_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
