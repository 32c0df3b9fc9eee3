use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid Hilbert space shape: {0}")]
    InvalidShape(String),

    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("eigenvalue {0:.3e} is negative beyond tolerance")]
    NegativeEigenvalue(f64),

    #[error("trace is {0}, expected 1")]
    InvalidTrace(f64),

    #[error("density matrix is singular (smallest eigenvalue {0:.3e})")]
    SingularDensity(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("missing parameter `{0}` for bound {1}")]
    MissingParameter(&'static str, &'static str),

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("quadrature did not converge: estimate {estimate:.6e}, error {error:.3e}")]
    Quadrature { estimate: f64, error: f64 },

    #[error("all Born weights vanish; state is not a valid unit vector")]
    ZeroBornWeights,
}

pub type Result<T> = std::result::Result<T, Error>;
