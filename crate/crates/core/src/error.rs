use thiserror::Error;

/// Errors raised by the solver, the diagnostics and the command-line layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("length mismatch: expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("grid mismatch: fields live on grids of size {left} and {right}")]
    GridMismatch { left: usize, right: usize },

    #[error("inverse transform left an imaginary residue of {residue:e} (relative)")]
    ImaginaryResidue { residue: f64 },

    #[error("degenerate metric: kappa must be positive to invert the inertia operator")]
    DegenerateMetric,

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("flow map is no longer a diffeomorphism (min phi_x = {min_jacobian:e})")]
    FlowDegenerate { min_jacobian: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("convergence probe inconclusive: {0}")]
    Inconclusive(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
