use thiserror::Error;

/// Errors raised anywhere in the estimation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("could not parse {value:?} in column {column:?} (row {row}) as a number")]
    Parse {
        column: String,
        row: usize,
        value: String,
    },

    #[error("column {0:?} not found")]
    MissingColumn(String),

    #[error("outcome column {column:?} has non-binary value {value} at row {row}")]
    NonBinaryOutcome {
        column: String,
        row: usize,
        value: f64,
    },

    #[error("no complete cases remain ({dropped} rows dropped)")]
    EmptyAfterCompleteCase { dropped: usize },

    #[error("unknown column {0:?}")]
    UnknownColumn(String),

    #[error("design is rank deficient: column {column:?} is (numerically) a combination of earlier columns")]
    RankDeficient { column: String },

    #[error("column {0:?} is not binary")]
    NotBinary(String),

    #[error("column {0:?} is not continuous")]
    NotContinuous(String),

    #[error("column {0:?} enters an interaction; use the chain-rule partial effect")]
    VariableInInteraction(String),

    #[error("design needs N > K and K >= 2 (got N = {n}, K = {k})")]
    TooFewObservations { n: usize, k: usize },

    #[error("dimension mismatch: expected {expected} columns, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("uniform half-width must be positive (got {0})")]
    NonPositiveA(f64),

    #[error("trimmed set is empty")]
    EmptyTrimSet,

    #[error("trimmed design ({kept} observations) is rank deficient")]
    RankDeficientTrimSet { kept: usize },

    #[error("{estimator} did not converge after {iterations} iterations")]
    DidNotConverge {
        estimator: &'static str,
        iterations: usize,
    },

    #[error("perfect separation: likelihood has no finite maximiser")]
    PerfectSeparation,

    #[error("Hessian analogue A_N is singular")]
    SingularA,

    #[error("unknown table id {0}")]
    UnknownTable(u32),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("too many failed replications for {estimator}: {failed} of {total}")]
    TooManyFailures {
        estimator: &'static str,
        failed: usize,
        total: usize,
    },
}

impl Error {
    /// True for failures of an iterative solver, as opposed to bad input.
    pub fn is_convergence(&self) -> bool {
        matches!(
            self,
            Error::DidNotConverge { .. }
                | Error::PerfectSeparation
                | Error::EmptyTrimSet
                | Error::RankDeficientTrimSet { .. }
                | Error::SingularA
                | Error::TooManyFailures { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
