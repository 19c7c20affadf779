use thiserror::Error;

/// Errors raised by the purity calculus and the simulators built on it.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("operator is not Hermitian (max deviation {max_deviation:e})")]
    NotHermitian { max_deviation: f64 },

    #[error("eigendecomposition did not converge within {max_iterations} iterations")]
    NoConvergence { max_iterations: usize },

    #[error("state is not normalized (squared norm {norm_sq})")]
    NotNormalized { norm_sq: f64 },

    #[error("expectation value has imaginary part {imaginary:e}")]
    ComplexExpectation { imaginary: f64 },

    #[error("invalid density operator: {0}")]
    InvalidDensity(String),

    #[error("non-finite time {0}")]
    InvalidTime(f64),

    #[error("system size guard: {0}")]
    SizeGuard(String),

    #[error("trivial observable: operator is proportional to the identity")]
    TrivialObservable,

    #[error("states are not orthogonal (overlap {overlap:e})")]
    NotOrthogonal { overlap: f64 },

    #[error("probability vector is not normalized (sum {sum})")]
    Unnormalized { sum: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("perturbation instance {instance}: {source}")]
    Instance {
        instance: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
