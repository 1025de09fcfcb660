use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("incompatible networks: {0}")]
    IncompatibleNetworks(String),
    #[error("probes did not converge: {0}")]
    NonConvergent(String),
    #[error("degenerate activation: {0}")]
    DegenerateActivation(String),
    #[error("unsupported activation class: {0}")]
    UnsupportedActivationClass(String),
    #[error("target not met: wanted {target:e}, achieved {achieved:e}")]
    TargetNotMet { target: f64, achieved: f64 },
    #[error("quadrature failed: {0}")]
    QuadratureFailure(String),
    #[error("profile is not zero-mean (m0 = {0:e})")]
    ProfileNotZeroMean(f64),
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("invalid tail: inner radius {inner} exceeds domain radius {r}")]
    InvalidTail { inner: f64, r: f64 },
    #[error("subset budget exceeded: {0} factors (max 12)")]
    SubsetBudgetExceeded(usize),
    #[error("limits unknown: {0}")]
    LimitsUnknown(String),
    #[error("not a one-layer network ({0} layers)")]
    NotOneLayer(usize),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}
