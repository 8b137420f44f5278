use thiserror::Error;

/// Errors raised by the model, integrators and solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("singular origin: |q| = {r} is not admissible")]
    SingularOrigin { r: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("index {index} outside the admissible range [{min}, {max}]")]
    IndexOutOfRange { index: usize, min: usize, max: usize },

    #[error("angle {index} = {value} outside its chart range")]
    AngleOutOfRange { index: usize, value: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("no classical motion at energy {energy}: below the effective-potential minimum {minimum}")]
    NoClassicalMotion { energy: f64, minimum: f64 },

    #[error("no circular orbit: {0}")]
    NoCircularOrbit(String),

    #[error("step size underflow at t = {t} (h = {h})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("invalid integrator tolerance {0}; expected a value in [1e-14, 1e-4]")]
    InvalidTolerance(f64),

    #[error("orbit is not bound: {0}")]
    Unbound(String),

    #[error("degenerate sample set: Jacobian rank {rank} < {expected} at every sample")]
    DegenerateSamples { rank: usize, expected: usize },

    #[error("level (n = {n}, l = {l}) is not an admitted bound state: {reason}")]
    NotAdmitted { n: usize, l: usize, reason: String },

    #[error("quadrature did not converge: estimated error {estimate:e} after {intervals} intervals")]
    Quadrature { estimate: f64, intervals: usize },

    #[error("invalid radial grid: {0}")]
    InvalidGrid(String),

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("test field violates its support invariant: {0}")]
    SupportViolation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
