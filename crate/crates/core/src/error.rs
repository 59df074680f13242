use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid schema: {0}")]
    Schema(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("empty file: {0}")]
    EmptyFile(PathBuf),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}:{line}: unknown value `{value}` for frozen categorical column `{column}`")]
    UnknownCategory {
        path: PathBuf,
        line: usize,
        column: String,
        value: String,
    },

    #[error("{path}:{line}: label `{value}` is neither a positive nor a negative value")]
    UnknownLabel {
        path: PathBuf,
        line: usize,
        value: String,
    },

    #[error("invalid split: {0}")]
    Split(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate training data: {0}")]
    Degenerate(String),

    #[error("{solver} did not converge after {iterations} iterations (residual {residual:e}, tolerance {tolerance:e})")]
    NonConvergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
        tolerance: f64,
    },

    #[error(
        "no decision boundary shift reaches |bias| <= {epsilon}; best achievable bias {best_bias} at shift {best_lambda}"
    )]
    InfeasibleShift {
        epsilon: f64,
        best_lambda: f64,
        best_bias: f64,
        best_error: f64,
    },

    #[error("relabeling probability undefined: bias {bias} > 0 but no protected example is negative")]
    NoProtectedNegatives { bias: f64 },

    #[error("training bias {0} is negative; massaging expects the protected group to be disadvantaged")]
    NegativeBias(f64),

    #[error("no eligible test rows for resilience estimate (protected rows with positive original label)")]
    NoEligibleRows,

    #[error("model document: {0}")]
    Model(String),

    #[error("missing data file {path}: {hint}")]
    MissingData { path: PathBuf, hint: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short stable identifier, used by the CLI for machine-readable errors.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Schema(_) => "schema",
            Error::Config(_) => "config",
            Error::EmptyFile(_) => "empty_file",
            Error::Parse { .. } => "parse",
            Error::UnknownCategory { .. } => "unknown_category",
            Error::UnknownLabel { .. } => "unknown_label",
            Error::Split(_) => "split",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Degenerate(_) => "degenerate",
            Error::NonConvergence { .. } => "non_convergence",
            Error::InfeasibleShift { .. } => "infeasible_shift",
            Error::NoProtectedNegatives { .. } => "no_protected_negatives",
            Error::NegativeBias(_) => "negative_bias",
            Error::NoEligibleRows => "no_eligible_rows",
            Error::Model(_) => "model",
            Error::MissingData { .. } => "missing_data",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}
