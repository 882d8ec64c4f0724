//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse classification used by callers that map failures to exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad configuration: unknown keys, out-of-range thresholds, missing seed.
    Config,
    /// Bad or degenerate data: parse failures, missing values, schema mismatches.
    Data,
    /// Numeric trouble: divergent solvers, infinite statistics, infeasible constraints.
    Numeric,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot parse '{value}' as a number at row {row}, column '{column}'")]
    NumericParse {
        row: usize,
        column: String,
        value: String,
    },
    #[error("missing target value in rows {rows:?}")]
    MissingTarget { rows: Vec<usize> },
    #[error("column '{0}' not found")]
    ColumnNotFound(String),
    #[error("column '{0}' is not numeric")]
    NotNumeric(String),
    #[error("column '{0}' is constant; drop it before computing correlations")]
    ConstantColumn(String),
    #[error("target contains a single class; both outcomes must be present")]
    SingleClassTarget,
    #[error("target must be 0/1; found {0} at row {1}")]
    InvalidTarget(String, usize),
    #[error("dataset degenerate after {op}: class {class} has no records left")]
    DegenerateDataset { op: &'static str, class: u8 },
    #[error("column lengths differ: '{column}' has {got} values, expected {expected}")]
    LengthMismatch {
        column: String,
        got: usize,
        expected: usize,
    },
    #[error("non-finite value in numeric column '{column}' at row {row}")]
    NonFiniteValue { column: String, row: usize },
    #[error("rows {rows:?} have no admission timestamp")]
    MissingTimestamps { rows: Vec<usize> },
    #[error("split fractions must sum to 1, got {0}")]
    BadFractions(f64),
    #[error("WoE is infinite for category '{category}' ({side} count is zero); use smoothing > 0")]
    InfiniteWoe {
        category: String,
        side: &'static str,
    },
    #[error("binning constraints infeasible; binding constraint: {constraint}")]
    InfeasibleBinning { constraint: &'static str },
    #[error("no IV score provided for feature '{0}'")]
    MissingIvScore(String),
    #[error("feature matrix does not match the model schema: {0}")]
    SchemaMismatch(String),
    #[error(
        "solver did not converge after {iterations} iterations (gradient norm {gradient_norm:.3e})"
    )]
    NoConvergence {
        iterations: usize,
        gradient_norm: f64,
        weights: Vec<f64>,
        intercept: f64,
    },
    #[error("cannot build {folds} stratified folds: minority class has {minority} records")]
    Stratification { folds: usize, minority: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("bootstrap unreliable: {skipped} of {iterations} replicates were degenerate")]
    UnreliableCi { skipped: usize, iterations: usize },
    #[error("metric '{name}' undefined on the full sample: {reason}")]
    UndefinedMetric { name: String, reason: String },
    #[error("empty background set")]
    EmptyBackground,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("synthetic spec infeasible: {0}")]
    InvalidSpec(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("[{stage}] {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        use Error::*;
        match self {
            Config(_) | InvalidSpec(_) | BadFractions(_) => ErrorKind::Config,
            InfiniteWoe { .. }
            | InfeasibleBinning { .. }
            | NoConvergence { .. }
            | UnreliableCi { .. } => ErrorKind::Numeric,
            Stage { source, .. } => source.kind(),
            _ => ErrorKind::Data,
        }
    }

    /// Label an error with the pipeline stage it surfaced from.
    pub fn stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
