use thiserror::Error;

#[derive(Debug, Error)]
pub enum DropletError {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("unsupported dimension n={0} (sampled operations require n=3)")]
    UnsupportedDimension(usize),

    #[error("shape rejected: sampled sup norm {sup:.6} is not below 1/2")]
    ShapeTooLarge { sup: f64 },

    #[error("unsupported Sobolev order {0}")]
    UnsupportedOrder(f64),

    #[error("constraint projection did not converge after {iters} Newton steps (residual {residual:.3e})")]
    ProjectionFailed { iters: usize, residual: f64 },

    #[error("mode degree m={0} is not supported (need m >= 2)")]
    InvalidMode(usize),

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("degenerate map at radius {rho:.6}, node {node}: jacobian {jac:.3e}")]
    DegenerateMap { rho: f64, node: usize, jac: f64 },

    #[error("conjugate gradient did not converge in {iters} iterations (residual {residual:.3e})")]
    NoConvergence { iters: usize, residual: f64 },

    #[error("solver monotonicity violated at iteration {iter}")]
    NonMonotone { iter: usize },

    #[error("line search step underflow at flow step {step}")]
    StepUnderflow { step: usize, trace: Box<crate::calculus::FlowTrace> },

    #[error("invalid solver options: {0}")]
    InvalidOptions(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, DropletError>;
