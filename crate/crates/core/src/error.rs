use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("point ({x}, {y}) lies outside the unit square")]
    OutOfDomain { x: f64, y: f64 },

    #[error("coercivity violation: {0}")]
    Coercivity(String),

    #[error("matrix is not symmetric positive definite: {0}")]
    NotSpd(String),

    #[error("linear solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    SolverFailure { iterations: usize, residual: f64 },

    #[error("Picard iteration did not converge after {iterations} iterations (last increment {increment:.3e})")]
    PicardDivergence { iterations: usize, increment: f64 },

    #[error("model assumption violated: {0}")]
    Assumption(String),

    #[error("time step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn at_step(self, step: usize) -> Error {
        match self {
            e @ Error::Step { .. } => e,
            e => Error::Step {
                step,
                source: Box::new(e),
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
