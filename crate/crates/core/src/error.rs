use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("multiplier is singular at the zero mode but the field has a nonzero mean")]
    SingularZeroMode,

    #[error("multiplier produced a field that is not real-valued (hermitian defect {defect:e})")]
    NotRealValued { defect: f64 },

    #[error("negative time {0}")]
    NegativeTime(f64),

    #[error("rate must be positive, got {0}")]
    InvalidRate(f64),

    #[error("dyadic block {j} outside partition range [{min}, {max}]")]
    BlockOutOfRange { j: i32, min: i32, max: i32 },

    #[error("degenerate path: {0}")]
    DegeneratePath(String),

    #[error("smallness violated: norm {norm:e} > threshold {threshold:e}{}", node.map(|n| format!(" at time node {n}")).unwrap_or_default())]
    SmallnessViolated {
        norm: f64,
        threshold: f64,
        node: Option<usize>,
    },

    #[error("initial data too large: {norm:e} > delta {delta:e}")]
    DataTooLarge { norm: f64, delta: f64 },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("1 + |D|H drops to {min:.4} (guard 0.4)")]
    DenominatorTooSmall { min: f64 },

    #[error("finite-difference system is not positive definite: {0}")]
    NotSpd(String),

    #[error("the two forms of the two-phase right-hand side disagree by {mismatch:e} (allowed {allowed:e})")]
    FormMismatch { mismatch: f64, allowed: f64 },

    #[error("cross-check failed: {0}")]
    CrossCheckFailed(String),

    #[error("log-log fit is poor (r^2 = {r2:.4})")]
    PoorFit { r2: f64, slope: f64 },

    #[error("dimension {0} is not supported here")]
    UnsupportedDimension(usize),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("configuration error: {0}")]
    Config(String),
}
