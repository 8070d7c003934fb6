//! Error type shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong while loading data, fitting models, or
/// writing results.
///
/// Variants split into two broad families that the CLI maps to distinct exit
/// codes: input/validation problems (bad shapes, non-finite values, parse
/// failures) and numerical-stage aborts (factorization failures, too many
/// failed subsample fits). [`Error::is_stage_abort`] tells them apart.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dataset is empty: need at least one group")]
    EmptyDataset,

    #[error("group {group} has {rows} rows; need at least 2")]
    TooFewSamples { group: usize, rows: usize },

    #[error("group {group} has {cols} columns but group 0 has {expected}")]
    ColumnCountMismatch {
        group: usize,
        cols: usize,
        expected: usize,
    },

    #[error("need at least {min} variables, got {got}")]
    TooFewVariables { got: usize, min: usize },

    #[error("group {group} has a non-finite value at row {row}, column {col}")]
    NonFiniteValue {
        group: usize,
        row: usize,
        col: usize,
    },

    #[error("column {col} of group {group} has zero variance; cannot standardize")]
    ZeroVariance { group: usize, col: usize },

    #[error("{what} must be square, got {rows}x{cols}")]
    NotSquare {
        what: &'static str,
        rows: usize,
        cols: usize,
    },

    #[error("{what} is not symmetric (max |m - m^T| = {max_asym:.3e})")]
    NotSymmetric { what: &'static str, max_asym: f64 },

    #[error("{what} is not positive definite")]
    NotPositiveDefinite { what: &'static str },

    #[error("invalid {what}: {why}")]
    InvalidParameter { what: &'static str, why: String },

    #[error("self-loop ({i}, {i}) is not a valid edge")]
    SelfLoop { i: usize },

    #[error("edge ({i}, {j}) is out of range for {p} nodes")]
    EdgeOutOfRange { i: usize, j: usize, p: usize },

    #[error("sparsity is undefined for fewer than 2 nodes (got {0})")]
    TooFewNodes(usize),

    #[error("graphs have different node counts: {0} vs {1}")]
    NodeCountMismatch(usize, usize),

    #[error("group counts differ: {0} vs {1}")]
    GroupCountMismatch(usize, usize),

    #[error("Cholesky factorization failed: {what} is not positive definite")]
    CholeskyFailure { what: &'static str },

    #[error("eigendecomposition did not converge")]
    EigenFailure,

    #[error("could not reach the positive-definiteness floor within {0} diagonal inflation steps")]
    DiagonalInflationFailed(usize),

    #[error("not enough candidate edges to rewire the graph")]
    NotEnoughNonEdges,

    #[error(
        "{failed} of {total} subsample fits failed at lambda1 = {lambda1}; \
         edge frequencies would be unreliable"
    )]
    TooManySubsampleFailures {
        lambda1: f64,
        failed: usize,
        total: usize,
    },

    #[error("every joint fit failed during lambda2 selection")]
    AllFitsFailed,

    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {why}")]
    Parse {
        path: String,
        line: usize,
        why: String,
    },
}

impl Error {
    /// Wrap an error with the pipeline stage it occurred in.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// True for numerical-stage aborts (the CLI exits with code 3); false for
    /// input, validation, and I/O problems (exit code 2). A stage wrapper
    /// only adds context, so it classifies by its source.
    pub fn is_stage_abort(&self) -> bool {
        match self {
            Error::Stage { source, .. } => source.is_stage_abort(),
            Error::CholeskyFailure { .. }
            | Error::EigenFailure
            | Error::DiagonalInflationFailed(_)
            | Error::TooManySubsampleFailures { .. }
            | Error::AllFitsFailed => true,
            _ => false,
        }
    }
}
