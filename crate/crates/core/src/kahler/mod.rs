//! Kahler forms in the canonical class of CP1 as densities against the
//! round form `omega_0` of the unit sphere.
//!
//! Conventions: `omega_0` has area `4 pi`, `Ric(omega_0) = omega_0`, and the
//! scalar curvature satisfies `Ric = (R / 2) omega`, so the Kahler-Einstein
//! value is `R = 2`.

pub mod snapshot;

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::spectral::{integrate_round, laplace_round, solve_poisson_round, SpectralGrid, SymField};

/// Densities at or below this are rejected outright, never clamped.
pub const DEGENERATE_DENSITY: f64 = 1e-12;

/// The fixed reference form `omega = omega_0 + i dd-bar psi` and its Ricci potential.
#[derive(Debug, Clone)]
pub struct Background<T> {
    pub grid: Arc<SpectralGrid<T>>,
    pub psi: SymField<T>,
    /// `omega / omega_0`
    pub rho: SymField<T>,
    /// `Ric(omega) / omega_0`
    pub ric_rho: SymField<T>,
    /// Ricci potential, normalized so that `integral (e^h - 1) omega = 0`.
    pub h: SymField<T>,
    pub volume: T,
}

/// The evolved metric `omega_phi = omega + i dd-bar phi`.
#[derive(Debug, Clone)]
pub struct MetricData<T> {
    /// `omega_phi / omega_0`
    pub rho_phi: SymField<T>,
    /// `Ric(omega_phi) / omega_0`
    pub ric_rho_phi: SymField<T>,
    /// `R(omega_phi) = 2 ric_rho_phi / rho_phi`
    pub scalar: SymField<T>,
    /// `log(omega_phi / omega)`, the log of the determinant ratio.
    pub log_ratio: SymField<T>,
    pub volume: T,
}

fn check_density<T: Scalar>(grid: &SpectralGrid<T>, rho: &SymField<T>, margin: T) -> Result<()> {
    let (node, min) = rho.argmin();
    if min <= margin || min.is_nan() {
        return Err(Error::KahlerConeViolation {
            node,
            x: grid.nodes()[node].as_f64(),
            density: min.as_f64(),
        });
    }
    Ok(())
}

impl<T: Scalar> Background<T> {
    /// The round Fubini-Study background (`psi = 0`), which is Kahler-Einstein.
    pub fn round(grid: Arc<SpectralGrid<T>>) -> Self {
        let psi = SymField::zeros(&grid);
        build_background(grid, psi).expect("round background is valid")
    }

    /// Background from a list of `(degree, amplitude)` modes for `psi`.
    pub fn from_modes(grid: Arc<SpectralGrid<T>>, modes: &[(usize, T)]) -> Result<Self> {
        let psi = SymField::from_modes(&grid, modes)?;
        build_background(grid, psi)
    }

    /// `integral (e^h - 1) omega`; zero up to round-off by construction.
    pub fn normalization_residual(&self) -> T {
        let g = &self.grid;
        let integrand = self.h.zip_map(g, &self.rho, |h, r| (h.exp() - T::one()) * r);
        integrate_round(g, &integrand).expect("same grid")
    }

    /// `omega`-weighted mean of `f`.
    pub fn omega_mean(&self, f: &SymField<T>) -> T {
        let g = &self.grid;
        crate::spectral::integrate_product(g, f.values(), self.rho.values()) / self.volume
    }
}

/// Builds the background determined by `psi` together with its Ricci potential.
pub fn build_background<T: Scalar>(grid: Arc<SpectralGrid<T>>, psi: SymField<T>) -> Result<Background<T>> {
    let g = &*grid;
    let rho = SymField::constant(g, T::one()).add(&laplace_round(g, &psi)?);
    check_density(g, &rho, T::lit(DEGENERATE_DENSITY))?;
    let log_rho = rho.map(g, T::ln);
    let ric_rho = SymField::constant(g, T::one()).sub(&laplace_round(g, &log_rho)?);
    let h0 = solve_poisson_round(g, &ric_rho.sub(&rho))?;
    let volume = integrate_round(g, &rho)?;
    let weighted = h0.zip_map(g, &rho, |h, r| h.exp() * r);
    let shift = -(integrate_round(g, &weighted)? / volume).ln();
    let h = h0.shift(shift);
    Ok(Background { grid, psi, rho, ric_rho, h, volume })
}

/// Metric quantities of `omega_phi`, rejecting densities at or below `margin`.
pub fn metric_with_margin<T: Scalar>(bg: &Background<T>, phi: &SymField<T>, margin: T) -> Result<MetricData<T>> {
    let g = &*bg.grid;
    let rho_phi = bg.rho.add(&laplace_round(g, phi)?);
    check_density(g, &rho_phi, margin)?;
    let log_ratio = rho_phi.zip_map(g, &bg.rho, |a, b| (a / b).ln());
    let ric_rho_phi = bg.ric_rho.sub(&laplace_round(g, &log_ratio)?);
    let two = T::lit(2.0);
    let scalar = ric_rho_phi.zip_map(g, &rho_phi, |r, d| two * r / d);
    let volume = integrate_round(g, &rho_phi)?;
    Ok(MetricData { rho_phi, ric_rho_phi, scalar, log_ratio, volume })
}

/// Metric quantities of `omega_phi = omega + i dd-bar phi`.
pub fn metric_from_potential<T: Scalar>(bg: &Background<T>, phi: &SymField<T>) -> Result<MetricData<T>> {
    metric_with_margin(bg, phi, T::lit(DEGENERATE_DENSITY))
}

/// `omega_phi / omega`, the n = 1 determinant ratio.
pub fn det_ratio<T: Scalar>(bg: &Background<T>, m: &MetricData<T>) -> Result<SymField<T>> {
    let g = &*bg.grid;
    check_density(g, &bg.rho, T::lit(DEGENERATE_DENSITY))?;
    check_density(g, &m.rho_phi, T::lit(DEGENERATE_DENSITY))?;
    Ok(m.rho_phi.zip_map(g, &bg.rho, |a, b| a / b))
}

impl<T: Scalar> MetricData<T> {
    /// `integral R omega_phi`, which Gauss-Bonnet fixes at `8 pi`.
    pub fn total_curvature(&self, grid: &SpectralGrid<T>) -> T {
        T::lit(2.0) * integrate_round(grid, &self.ric_rho_phi).expect("same grid")
    }
}
