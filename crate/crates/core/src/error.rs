use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("mesh error: {0}")]
    Mesh(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("validation error: {0}")]
    Validation(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("descriptor error: {0}")]
    Descriptor(String),
    #[error("assembly error: inverted element {cell} (jacobian determinant {det:.3e})")]
    InvertedElement { cell: usize, det: f64 },
    #[error("constraint error: {0}")]
    Constraint(String),
    #[error("solver error: {0}")]
    Solver(String),
    #[error("newton iteration did not converge after {iterations} iterations (last residual {last_residual:.3e})")]
    Convergence {
        iterations: usize,
        last_residual: f64,
        history: Vec<f64>,
    },
    #[error("unsupported topology: {0}")]
    Topology(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
