use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("family has more than {cap} members")]
    CapExceeded { cap: usize },

    #[error("invalid family: {0}")]
    InvalidFamily(String),

    #[error("family is empty")]
    EmptyFamily,

    #[error("graph is disconnected")]
    Disconnected,

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("bipartite sides differ: {left} left vs {right} right")]
    SideMismatch { left: usize, right: usize },

    #[error("matrix size {n} exceeds the supported maximum {max}")]
    SizeExceeded { n: usize, max: usize },

    #[error("equality system rows are linearly dependent")]
    RankDeficient,

    #[error("cut normal has no component in the working subspace")]
    DegenerateNormal,

    #[error("basis is not orthonormal: {0}")]
    BadBasis(String),

    #[error("point does not appear to be interior: {0}")]
    NotInterior(String),

    #[error("iteration limit {limit} reached")]
    MaxIterations { limit: usize },

    #[error("no guess succeeded; the counting oracle is inconsistent")]
    NoGuessSucceeded,

    #[error("marginal gap {gap:.3e} exceeds bound {bound:.3e}")]
    GapExceeded { gap: f64, bound: f64 },

    #[error("entropy oracle broke its contract: {0}")]
    SolverContractViolation(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("marginals violate the equality system (residual {residual:.3e})")]
    InfeasibleMarginals { residual: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
