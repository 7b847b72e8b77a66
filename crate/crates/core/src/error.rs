use thiserror::Error;

/// Errors raised by the numerical operators.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("boundary map is not monotone: {0}")]
    MonotonicityViolation(String),

    #[error("barycenter solve did not converge at vertex {vertex}: residual {residual:.3e} after {iterations} iterations")]
    NonConvergence {
        vertex: usize,
        residual: f64,
        iterations: usize,
    },

    #[error("degenerate stencil at vertex {0}: neighbor directions do not span the tangent plane")]
    DegenerateStencil(usize),

    #[error("linear solver diverged: residual {residual:.3e} after {iterations} iterations")]
    SolverDivergence { residual: f64, iterations: usize },

    #[error("map degenerated: nondegeneracy coefficient {tau:.3e} fell below the floor {floor:.3e} at t = {t}")]
    DegenerateMap { tau: f64, floor: f64, t: f64 },

    #[error("iteration limit reached in eigenvalue estimation after {0} iterations")]
    IterationLimit(usize),

    #[error("flow step {step} failed: {source}")]
    FlowStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
