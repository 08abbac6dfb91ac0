use thiserror::Error;

/// Errors produced anywhere in the solver pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("empty matrix: {0}")]
    EmptyMatrix(&'static str),

    #[error("index overflow building a {nrows} x {ncols} matrix")]
    IndexOverflow { nrows: usize, ncols: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("factorization breakdown at row {row}: {reason}")]
    FactorizationBreakdown { row: usize, reason: String },

    #[error("non-finite value encountered during {0}")]
    NonFinite(&'static str),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("did not converge within {iterations} iterations (residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("undefined quantity: {0}")]
    Undefined(&'static str),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("matrix market parse error at line {line}: {msg}")]
    MatrixMarket { line: usize, msg: String },

    #[error("stage '{stage}' failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Wrap an error with the pipeline stage it occurred in.
    pub fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
