use thiserror::Error;

/// Errors produced by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed operator spec: {0}")]
    MalformedSpec(String),

    #[error("operation not supported for kernel form {form}: {reason}")]
    UnsupportedForm { form: &'static str, reason: String },

    #[error("integral diverges: {0}")]
    DivergentIntegral(String),

    #[error("quadrature failed to converge under refinement ({context}): last values {previous:e} and {last:e}")]
    NonConvergence {
        context: String,
        previous: f64,
        last: f64,
    },

    #[error("lattice mismatch: {0}")]
    LatticeMismatch(String),

    #[error("lattice too small: {0}")]
    LatticeTooSmall(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("block index {j} outside -1..={j_max}")]
    BlockOutOfRange { j: i32, j_max: i32 },

    #[error("CFL violation: dt = {dt:e} exceeds limit {limit:e} (|u|_inf = {u_max:e})")]
    CflViolation { dt: f64, limit: f64, u_max: f64 },

    #[error("non-finite value detected at t = {t}")]
    BlowUp { t: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid iteration schedule: {0}")]
    Schedule(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
