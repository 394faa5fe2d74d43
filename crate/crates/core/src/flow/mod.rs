//! Time integration of the normalized Kahler-Ricci flow on potentials,
//!
//! `d phi / dt = log(omega_phi / omega) + phi - h`,
//!
//! together with the two gauge operations the flow needs: removal of the
//! free constant and re-centering by Mobius dilations.

mod gauge;
mod run;
mod step;

pub use gauge::{
    dilation_conformal_factor, dilation_map, dilation_potential, gauge_fix_constant, modify_by_automorphism,
    pullback_by_dilation, remove_omega_mean, AutomorphismFix,
};
pub use run::{run_flow, run_flow_with, ConservationSample, DiagnosticsRecord, RunReport, StopReason};
pub use step::{flow_rhs, imex_linear_multiplier, imex_symbol, step, step_explicit, step_imex};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::spectral::SymField;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    ExplicitRk4,
    Imex,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct Tolerances<T> {
    /// Minimum density `omega_phi / omega_0` a step may produce.
    pub cone_margin: T,
    pub newton_tol: T,
    pub max_newton_iters: usize,
}

impl<T: Scalar> Default for Tolerances<T> {
    fn default() -> Self {
        Self { cone_margin: T::lit(1e-8), newton_tol: T::lit(1e-10), max_newton_iters: 50 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct FlowConfig<T> {
    pub scheme: Scheme,
    pub dt_init: T,
    pub dt_max: T,
    pub t_max: T,
    pub adapt: bool,
    /// Growth factor applied to `dt` after each accepted step when adapting.
    pub safety_factor: T,
    pub gauge_fix_constant: bool,
    pub automorphism_modification: bool,
    pub sample_every: T,
    /// Stop once `max |R - r|` at the nodes drops to `convergence_tol`.
    pub stop_on_convergence: bool,
    pub convergence_tol: T,
    pub tolerances: Tolerances<T>,
}

impl<T: Scalar> Default for FlowConfig<T> {
    fn default() -> Self {
        Self {
            scheme: Scheme::Imex,
            dt_init: T::lit(1e-3),
            dt_max: T::lit(0.05),
            t_max: T::lit(10.0),
            adapt: true,
            safety_factor: T::lit(1.2),
            gauge_fix_constant: true,
            automorphism_modification: true,
            sample_every: T::lit(0.05),
            stop_on_convergence: true,
            convergence_tol: T::lit(1e-8),
            tolerances: Tolerances::default(),
        }
    }
}

impl<T: Scalar> FlowConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidFlowConfig(m.to_string()));
        if !(self.dt_init > T::zero()) {
            return bad("dt_init must be positive");
        }
        if !(self.dt_max >= self.dt_init) {
            return bad("dt_max must be at least dt_init");
        }
        if !(self.t_max > T::zero()) {
            return bad("t_max must be positive");
        }
        if !(self.sample_every > T::zero()) {
            return bad("sample_every must be positive");
        }
        if !(self.safety_factor >= T::one()) {
            return bad("safety_factor must be >= 1");
        }
        if !(self.tolerances.cone_margin > T::zero()) {
            return bad("cone_margin must be positive");
        }
        if !(self.tolerances.newton_tol > T::zero()) {
            return bad("newton_tol must be positive");
        }
        if !(self.convergence_tol > T::zero()) {
            return bad("convergence_tol must be positive");
        }
        Ok(())
    }
}

/// Evolving state: time, potential, and the accumulated dilation.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowState<T> {
    pub t: T,
    pub phi: SymField<T>,
    pub lambda_gauge: T,
    /// Number of diagnostic samples emitted so far.
    pub samples: usize,
}

impl<T: Scalar> FlowState<T> {
    pub fn new(phi: SymField<T>) -> Self {
        Self { t: T::zero(), phi, lambda_gauge: T::one(), samples: 0 }
    }
}
