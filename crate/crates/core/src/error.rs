use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("singular linear system: pivot {pivot:.3e} at index {index}")]
    SingularSystem { pivot: f64, index: usize },

    #[error("drift matrix is not positively stable: min Re(lambda) = {min_re:.3e}")]
    UnstableDrift { min_re: f64 },

    #[error("problem size {size} exceeds the dense-solve cap {cap}")]
    SizeCapExceeded { size: usize, cap: usize },

    #[error("eigensolver failed to converge after {iters} iterations")]
    EigNonConvergence { iters: usize },

    #[error("quadrature did not converge: {0}")]
    QuadratureFailure(String),

    #[error("residual check failed: {residual:.3e} > {tolerance:.3e} ({context})")]
    ResidualFailure {
        residual: f64,
        tolerance: f64,
        context: String,
    },

    #[error("reduced system is ill-conditioned: cond estimate {cond:.3e}")]
    IllConditioned { cond: f64 },

    #[error("structured solve supports odd N only, got N = {0}")]
    EvenNUnsupported(usize),

    #[error("numerical blow-up during simulation at step {step}: |z| = {norm:.3e}")]
    SimulationBlowup { step: usize, norm: f64 },

    #[error("verification failed: {0}")]
    VerificationFailure(String),

    #[error("cache corruption at {path}: {reason}")]
    CacheCorruption { path: String, reason: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path}: {reason}")]
    Parse { path: String, reason: String },
}
