//! Crate-wide error type and exit-code mapping.

/// All fallible operations in this crate return this error.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("missing column `{column}`")]
    MissingColumn { column: String },

    #[error("non-numeric value in column `{column}`, row {row}")]
    NonNumeric { row: usize, column: String },

    #[error("duplicate region id `{id}`, row {row}")]
    DuplicateId { row: usize, id: String },

    #[error("non-positive baseline, row {row}")]
    NonPositiveBaseline { row: usize },

    #[error("non-positive variance, row {row}")]
    NonPositiveVariance { row: usize },

    #[error("unknown region id `{0}`")]
    UnknownRegion(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    /// Zone shape incompatible with the requested statistic, e.g. the
    /// all-regions zone under a population-based model.
    #[error("degenerate zone: {0}")]
    DegenerateZone(&'static str),

    #[error("zero outcome total")]
    ZeroTotal,

    /// Outcome vector incompatible with the statistic, e.g. a Bernoulli
    /// outcome that is all zeros or all ones.
    #[error("degenerate outcome: {0}")]
    DegenerateOutcome(&'static str),

    /// Residual variance collapsed below the numeric floor (perfect
    /// separation); carries +inf log-likelihood-ratio semantics.
    #[error("degenerate variance (residual variance below numeric floor)")]
    DegenerateVariance,

    #[error("design matrix is rank deficient")]
    RankDeficient,

    #[error("model fit failed to converge after {0} iterations")]
    NonConvergence(usize),

    #[error("no zone could be evaluated")]
    EmptyResult,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("internal consistency: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code for the CLI: 1 usage, 2 data error, 3 numeric
    /// degeneracy.
    pub fn exit_code(&self) -> i32 {
        use Error::*;
        match self {
            InvalidConfig(_) => 1,
            MissingColumn { .. }
            | NonNumeric { .. }
            | DuplicateId { .. }
            | NonPositiveBaseline { .. }
            | NonPositiveVariance { .. }
            | UnknownRegion(_)
            | InvalidData(_)
            | Io(_)
            | Csv(_) => 2,
            DegenerateZone(_)
            | ZeroTotal
            | DegenerateOutcome(_)
            | DegenerateVariance
            | RankDeficient
            | NonConvergence(_)
            | EmptyResult
            | Internal(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
