use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid data: {0}")]
    Data(String),

    #[error("non-finite or out-of-range numeric input: {0}")]
    Numeric(String),

    #[error("missing capability: {0}")]
    Capability(String),

    #[error("degenerate solver state: {0}")]
    DegenerateState(String),

    #[error("subproblem solver failed after {iterations} iterations ({reason}); best residual ratio {best_residual_ratio:.3e}")]
    SolverFailure {
        reason: String,
        iterations: usize,
        best_residual_ratio: f64,
    },

    #[error("lambda search failed after {steps} evaluations; last bracket [{lower:.6e}, {upper:.6e}], last phi {last_phi:.6e}")]
    LineSearch {
        steps: usize,
        lower: f64,
        upper: f64,
        last_phi: f64,
    },

    #[error("step {k} failed: {source}")]
    Step {
        k: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at_step(self, k: usize) -> Self {
        match self {
            e @ Error::Step { .. } => e,
            other => Error::Step {
                k,
                source: Box::new(other),
            },
        }
    }

    /// The innermost error, unwrapping step context.
    pub fn root(&self) -> &Error {
        match self {
            Error::Step { source, .. } => source.root(),
            other => other,
        }
    }
}
