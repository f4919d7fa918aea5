use thiserror::Error;

use crate::ch::VelocityState;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {left} vs {right} samples")]
    GridMismatch { left: usize, right: usize },

    #[error("non-finite sample at index {index}")]
    NonFinite { index: usize },

    #[error("monotonicity lost: derivative {derivative:.3e} at node {node}")]
    MonotonicityLost { node: usize, derivative: f64 },

    #[error("root solve did not converge: {0}")]
    NonConvergence(String),

    #[error("inertia operator is singular on this input: {0}")]
    SingularInertia(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("orbit {0} is a constraint, not an evolution equation")]
    NotEvolvable(String),

    #[error("state became non-smooth (NaN/Inf) at step {step}")]
    NonSmoothState {
        step: usize,
        last_valid: Box<VelocityState>,
    },

    #[error("requested time {t} is at or past the shock time {t_shock}")]
    ShockReached { t: f64, t_shock: f64 },

    #[error("scaling with lambda*mu = {0} does not preserve the 2pi period")]
    PeriodMismatch(f64),

    #[error("transformation is not a symmetry of the equation: {0}")]
    NotASymmetry(String),

    #[error("matrix dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not orthogonal with positive determinant (residual {0:.3e})")]
    OrthogonalityLost(f64),

    #[error("matrix is not skew-symmetric (residual {0:.3e})")]
    NotSkew(f64),

    #[error("matrix is not symmetric positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("no near-identity solution branch: {0}")]
    NoNearIdentityBranch(String),

    #[error("residual {residual:.3e} exceeds tolerance {tolerance:.1e}")]
    ResidualTooLarge { residual: f64, tolerance: f64 },

    #[error("periodic linear ODE is resonant (monodromy {monodromy})")]
    ResonantOde { monodromy: f64 },

    #[error("sign violation: {0}")]
    SignViolation(String),

    #[error("could not bracket the periodicity root: {0}")]
    NoBracket(String),

    #[error("step is not periodic for C = {c}: integral defect {defect:.3e}")]
    PeriodicityDefect { c: f64, defect: f64 },

    #[error("density violates its structural condition: {0}")]
    DensityCondition(String),

    #[error("invalid sequence: {0}")]
    InvalidSequence(String),
}
