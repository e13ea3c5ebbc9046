use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeoPhaseError {
    #[error("matrix is not Hermitian: max |m_ij - conj(m_ji)| = {deviation:e}")]
    NonHermitian { deviation: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unphysical state: |p| = {norm} exceeds 1")]
    UnphysicalState { norm: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("branch ambiguity at step {step}, branch {branch}: best overlap {overlap:.3e} < 0.5")]
    BranchAmbiguity {
        step: usize,
        branch: usize,
        overlap: f64,
    },

    #[error("no convergence after {levels} grid levels (last delta {delta:e} rad)")]
    NoConvergence { levels: usize, delta: f64 },

    #[error("degenerate state: {0}")]
    DegenerateState(String),

    #[error("unsupported bath: {0}")]
    UnsupportedBath(String),

    #[error("coupling matrices do not commute (max |[A,B]| = {residual:e})")]
    NotSimultaneouslyDiagonalizable { residual: f64 },

    #[error("zero energy gap: the dephasing estimate is undefined")]
    ZeroGap,

    #[error("quadrature did not settle: last componentwise change {change:e} at {nodes} nodes")]
    QuadratureDivergence { nodes: usize, change: f64 },

    #[error("regime violation: {0}")]
    RegimeViolation(String),

    #[error("Fock truncation not converged at n_max = {n_max}: change {change:e}")]
    TruncationNotConverged { n_max: usize, change: f64 },

    #[error("dimension overflow: {0}")]
    DimensionOverflow(String),
}

pub type Result<T> = std::result::Result<T, GeoPhaseError>;
