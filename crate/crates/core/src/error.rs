use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("non-finite complex input")]
    NonFinite,

    #[error("{k} is not an eigenvalue: residual {residual:.3e} exceeds {tolerance:.3e}")]
    NotAnEigenvalue { k: String, residual: f64, tolerance: f64 },

    #[error("eigenvalue iteration did not converge within {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error(
        "F^{a}_{gamma} (x) V_({lambda}, {rho}) is not decomposable: \
         rho + A*lambda lies in (-2 gamma, 2 gamma) and is an integer, the Casimirs are not diagonalisable"
    )]
    NotDecomposable { gamma: String, a: i8, lambda: String, rho: String },

    #[error("target module {target} does not occur in the decomposition; the tensor operator must identically vanish")]
    AbsentTarget { target: String },

    #[error("degenerate normalisation: rho^2 = lambda^2 makes sqrt(lambda + A rho) vanish")]
    DegenerateNormalisation,

    #[error("internal consistency failure: {0}")]
    Consistency(String),

    #[error("insufficient sample: {0}")]
    InsufficientSample(String),

    #[error("incompatible operator bases: {0}")]
    Incompatible(String),

    #[error("singular matrix")]
    Singular,
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
