use thiserror::Error;

/// Errors raised by the numerical core.
///
/// Payloads are widened to `f64` so the type stays independent of the scalar.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("grid needs at least {min} nodes, got {got}")]
    GridTooSmall { min: usize, got: usize },

    #[error("Gauss-Legendre root {index} did not converge after {iters} Newton iterations")]
    NodeSolverDiverged { index: usize, iters: usize },

    #[error("field has {got} nodes but grid has {expected}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("Poisson right-hand side has round mean {mean:e}; not solvable (cohomology mismatch upstream)")]
    Unsolvable { mean: f64 },

    #[error("Kahler cone violated: density {density:e} at node {node} (x = {x})")]
    KahlerConeViolation { node: usize, x: f64, density: f64 },

    #[error("step rejected, retry with dt <= {suggested_dt:e}")]
    StepRejected { suggested_dt: f64 },

    #[error("time step underflow at t = {t}: dt = {dt:e}")]
    DtUnderflow { t: f64, dt: f64 },

    #[error("automorphism gauge did not converge after {iters} iterations, moment {moment:e}")]
    NewtonDiverged { iters: usize, moment: f64 },

    #[error("non-positive dilation parameter {0}")]
    InvalidDilation(f64),

    #[error("energy order k = {0} does not exist in complex dimension 1")]
    UnsupportedOrder(usize),

    #[error("time series not sorted at index {index}")]
    UnsortedSeries { index: usize },

    #[error("non-positive value {value:e} at index {index} in fit window")]
    NonPositiveInWindow { index: usize, value: f64 },

    #[error("invalid flow configuration: {0}")]
    InvalidFlowConfig(String),

    #[error("diagnostics invariant `{invariant}` violated: {detail}")]
    DiagnosticsInvariant { invariant: &'static str, detail: String },

    #[error("run aborted by observer: {0}")]
    Observer(String),
}

pub type Result<T> = std::result::Result<T, Error>;
