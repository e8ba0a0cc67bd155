use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square: {rows} x {cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("kernel is not stochastic: {0}")]
    NotStochastic(String),

    #[error("chain is not irreducible: {0}")]
    NotIrreducible(String),

    #[error("detailed balance violated: max residual {residual:e}")]
    NotReversible { residual: f64 },

    #[error("weight graph is disconnected")]
    Disconnected,

    #[error("negative weight {value} at ({row}, {col})")]
    NegativeWeight { row: usize, col: usize, value: f64 },

    #[error("weight matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },

    #[error("target has non-positive mass at state {0}")]
    ZeroTargetMass(usize),

    #[error("observable is not centered under the stationary law: mean {mean:e}")]
    NotCentered { mean: f64 },

    #[error("non-finite value in input")]
    NonFinite,

    #[error("invalid trajectory length {0}")]
    InvalidLength(usize),

    #[error("symmetric eigen-solve failed: {0}")]
    EigenFailure(String),

    #[error("spectral measure has mass {weight:e} at eigenvalue 1; integral of 1/(1-t) diverges")]
    FiniteVarianceViolated { weight: f64 },

    #[error("Poisson equation could not be solved: residual {residual:e}")]
    SingularPoisson { residual: f64 },

    #[error("index {index} out of range: {reason}")]
    IndexOutOfRange { index: usize, reason: String },

    #[error("degenerate asymptotic variance sigma2 = {0:e}")]
    DegenerateVariance(f64),

    #[error("invalid number of replicas {0}")]
    InvalidReplicas(usize),

    #[error("exhaustive enumeration needs {paths} paths (limit {limit})")]
    ExhaustiveTooLarge { paths: f64, limit: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
