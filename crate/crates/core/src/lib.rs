//! Numerical laboratory for the normalized Kahler-Ricci flow on CP1.
//!
//! Potentials are S1-symmetric fields on the unit sphere, discretized by
//! Gauss-Legendre collocation in `x = cos(theta)`. The crate provides the
//! flow itself (explicit RK4 and an IMEX splitting), gauge fixing by
//! constants and by Mobius dilations, the leading terms of the `E_0` and
//! `E_1` energies, the Onofri inequality check, and an experiment harness
//! that writes JSON-lines diagnostics.
//!
//! Numerical code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix `f64`, which is what every documented tolerance assumes.

pub mod error;
pub mod flow;
pub mod functionals;
pub mod kahler;
pub mod lab;
pub mod scalar;
pub mod spectral;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Grid = spectral::SpectralGrid<f64>;
pub type Field = spectral::SymField<f64>;
pub type Bg = kahler::Background<f64>;
pub type Metric = kahler::MetricData<f64>;
pub type Flow = flow::FlowConfig<f64>;
pub type State = flow::FlowState<f64>;
pub type Report = flow::RunReport<f64>;
pub type Record = flow::DiagnosticsRecord<f64>;
