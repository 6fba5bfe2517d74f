use thiserror::Error;

/// Errors produced while loading data or training.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("more than two distinct labels found ({0:?})")]
    TooManyLabels(Vec<f64>),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("dimension mismatch: data has {data} features but model has {model}")]
    DimMismatch { data: usize, model: usize },

    #[error("model file: {0}")]
    Model(String),

    #[error(
        "reference solver did not converge in {sweeps} sweeps \
         (primal {primal}, dual {dual}, violation {violation:e})"
    )]
    NoConvergence {
        sweeps: usize,
        primal: f64,
        dual: f64,
        violation: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
