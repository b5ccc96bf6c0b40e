use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("manifold {manifold} exceeds the photon truncation N_max = {n_max}")]
    ManifoldOutOfRange { manifold: usize, n_max: usize },

    #[error("system has no drive")]
    NoDrive,

    #[error("steady state is not unique (Liouvillian nullspace is degenerate)")]
    DegenerateSteadyState,

    #[error("negative propagation time {0} s")]
    NegativeTime(f64),

    #[error("mean photon number is zero; correlation normalization is undefined")]
    ZeroMeanPhotonNumber,

    #[error("averaging window [{start}, {end}] contains no samples")]
    EmptyWindow { start: f64, end: f64 },

    #[error("fit precondition violated: {0}")]
    FitPrecondition(String),

    #[error("degenerate fit: Jacobian is singular")]
    DegenerateFit,

    #[error("numerical failure: {0}")]
    Numerical(String),
}
