use thiserror::Error;

/// Errors shared by all modules of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty factor list")]
    EmptyFactorList,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("ket is not normalized (|sum of squared amplitudes - 1| = {deviation:.3e})")]
    NotNormalized { deviation: f64 },

    #[error("matrix is not Hermitian (max entrywise deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("trace deviates from 1 by {deviation:.3e}")]
    InvalidTrace { deviation: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("state is not pure (tr rho^2 = {purity})")]
    NotPure { purity: f64 },

    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("parameter out of domain: {0}")]
    DomainViolation(String),

    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    #[error("SLD residual {residual:.3e} exceeds tolerance {tolerance:.3e}")]
    SldResidual { residual: f64, tolerance: f64 },

    #[error(
        "outcome {outcome} has vanishing probability but finite sensitivity |dp| = {derivative:.3e}"
    )]
    SingularParametrization { outcome: usize, derivative: f64 },

    #[error("matrix is numerically singular: {0}")]
    SingularMatrix(String),

    #[error("family is not monotone non-decreasing on its domain")]
    NonMonotoneFamily,

    #[error(
        "derivative of f[{index}] disagrees with finite differences at theta = {theta} \
         (error {deviation:.3e})"
    )]
    InconsistentDerivative {
        index: usize,
        theta: f64,
        deviation: f64,
    },

    #[error("estimator undefined in {failures} of {trials} trials")]
    EstimatorBreakdown { failures: u64, trials: u64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
