use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the set on which the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    /// The kernel has more than one recurrent class, so its stationary
    /// measure is not unique.
    #[error("kernel is decomposable into {} recurrent classes", classes.len())]
    Decomposable { classes: Vec<Vec<usize>> },

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("walk is stuck at vertex {vertex} after {step} steps (trajectory tail: {tail:?})")]
    DeadEnd {
        vertex: usize,
        step: u64,
        tail: Vec<usize>,
    },

    #[error("point is not an equilibrium (residual {residual:e})")]
    NotEquilibrium { residual: f64 },

    #[error("eigen-solver failure: {0}")]
    Eigen(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit status: 2 for configuration errors, 3 for anything that
    /// fails at run time.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            _ => 3,
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
