use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("{0} is numerically singular")]
    Singular(&'static str),

    #[error("{0} is not symmetric positive definite")]
    NotSpd(&'static str),

    #[error("dimension {n} exceeds the dense limit {limit}")]
    DenseLimit { n: usize, limit: usize },

    /// The pencil has an eigenvalue whose imaginary part is too large to realify.
    #[error(
        "eigenvalue {re:.6e}{im:+.6e}i has |Im| above the tolerance {tol:.1e} (relative to max |lambda|)"
    )]
    ComplexSpectrum { re: f64, im: f64, tol: f64 },

    /// A vector that is neutral in the indefinite smoother inner product.
    #[error("eigenvector for lambda = {value:.6e} is neutral in the smoother form (|v'Mv| = {norm:.3e})")]
    NeutralVector { value: f64, norm: f64 },

    #[error("coarse operator is numerically singular (condition estimate {cond:.3e})")]
    IllConditionedCoarse { cond: f64 },

    #[error("{0} did not converge")]
    NoConvergence(&'static str),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
