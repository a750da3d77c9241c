use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on an argument was violated.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("eigensolver did not converge within {sweeps} sweeps (off-diagonal {residual:e})")]
    IterationLimit { sweeps: usize, residual: f64 },

    #[error("evaluation time {t} outside valid window ({lo}, {hi})")]
    OutOfWindow { t: f64, lo: f64, hi: f64 },

    #[error("estimation window around t={t} contains no usable increments")]
    DegenerateWindow { t: f64 },

    #[error("time {t} is not on the simulation grid")]
    OffGrid { t: f64 },

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("{method}: {source}")]
    Method {
        method: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}
