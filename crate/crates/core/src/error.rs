use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("invalid label vector: {0}")]
    InvalidLabels(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("unknown labeling {0} in weight table")]
    UnknownLabeling(String),

    #[error("invalid weight specification: {0}")]
    InvalidWeight(String),

    #[error("margin {margin} exceeds the overflow cap {cap}")]
    Overflow { margin: f64, cap: f64 },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("degenerate weight: expected weight W is zero")]
    DegenerateWeight,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("optimizer did not converge after {iterations} iterations (gradient norm {grad_norm:e})")]
    NonConvergence {
        iterations: usize,
        grad_norm: f64,
        last_iterate: Vec<f64>,
    },

    #[error("label {label}: {source}")]
    Label {
        label: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unsupported model format: {0}")]
    ModelFormat(String),

    #[error("unknown method `{0}`")]
    UnknownMethod(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, found })
    }
}
