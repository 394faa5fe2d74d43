//! Energies, curvature statistics and the integral estimates monitored along the flow.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::pullback_by_dilation;
use crate::kahler::{metric_from_potential, Background, MetricData};
use crate::scalar::Scalar;
use crate::spectral::{dirichlet_energy, extrema, integrate_product, integrate_round, SpectralGrid, SymField};

/// Snapshot of the energy and curvature quantities of one potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyReport<T> {
    pub e0: T,
    pub e1: T,
    pub el0_residual_norm: T,
    /// Average scalar curvature `r`.
    pub r_avg: T,
    pub r_min: T,
    pub r_max: T,
    /// `integral (R - r)^2 omega_phi`
    pub l2_r_defect: T,
    /// `min omega_phi / omega` over the nodes.
    pub vol_min_ratio: T,
}

/// The curvature part of [`EnergyReport`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalarStats<T> {
    pub r_avg: T,
    pub r_min: T,
    pub r_max: T,
    pub l2_r_defect: T,
}

/// Leading term of `E_k` for `k` in `{0, 1}`:
/// `integral (log(omega_phi / omega) - h) W_k` with `W_0 = omega_phi` and
/// `W_1 = omega + Ric(omega_phi)`.
pub fn energy_leading<T: Scalar>(bg: &Background<T>, phi: &SymField<T>, k: usize) -> Result<T> {
    if k > 1 {
        return Err(Error::UnsupportedOrder(k));
    }
    let m = metric_from_potential(bg, phi)?;
    energy_leading_for_metric(bg, &m, k)
}

pub fn energy_leading_for_metric<T: Scalar>(bg: &Background<T>, m: &MetricData<T>, k: usize) -> Result<T> {
    let g = &*bg.grid;
    let potential: Vec<T> = m.log_ratio.values().iter().zip(bg.h.values()).map(|(&l, &h)| l - h).collect();
    match k {
        0 => Ok(integrate_product(g, &potential, m.rho_phi.values())),
        1 => {
            let weight: Vec<T> = bg.rho.values().iter().zip(m.ric_rho_phi.values()).map(|(&a, &b)| a + b).collect();
            Ok(integrate_product(g, &potential, &weight))
        }
        _ => Err(Error::UnsupportedOrder(k)),
    }
}

fn residual_for_metric<T: Scalar>(grid: &SpectralGrid<T>, m: &MetricData<T>) -> (SymField<T>, T, T) {
    let r = integrate_product(grid, m.scalar.values(), m.rho_phi.values()) / m.volume;
    let resid = m.scalar.shift(-r);
    let sq: Vec<T> = resid.values().iter().map(|&v| v * v).collect();
    let l2 = integrate_product(grid, &sq, m.rho_phi.values());
    (resid, r, l2)
}

/// Euler-Lagrange residual of `E_0`: the field `R - r` and its `L^2(omega_phi)` norm.
///
/// The constant is the `omega_phi`-average of `R`, the only one for which the
/// critical-point equation integrates to zero.
pub fn el_residual<T: Scalar>(bg: &Background<T>, phi: &SymField<T>) -> Result<(SymField<T>, T)> {
    let m = metric_from_potential(bg, phi)?;
    let (resid, _, l2) = residual_for_metric(&bg.grid, &m);
    Ok((resid, l2.sqrt()))
}

/// `|E_k(pullback(phi, lam)) - E_k(phi)|`.
pub fn invariance_defect<T: Scalar>(bg: &Background<T>, phi: &SymField<T>, lam: T, k: usize) -> Result<T> {
    if lam == T::one() {
        return Ok(T::zero());
    }
    let pulled = pullback_by_dilation(bg, phi, lam)?;
    Ok((energy_leading(bg, &pulled, k)? - energy_leading(bg, phi, k)?).abs())
}

/// Onofri gap on the unit sphere in the conformal-factor convention `e^{2u} g_round`:
///
/// `(1 / 4 pi) integral |grad u|^2 dA - log((1 / 4 pi) integral e^{2(u - u_bar)} dA)`.
///
/// Non-negative for every `u`, zero exactly on conformal factors of Mobius maps.
pub fn onofri_gap<T: Scalar>(grid: &SpectralGrid<T>, u: &SymField<T>) -> Result<T> {
    grid.check_len(u.len())?;
    let four_pi = T::lit(4.0) * T::PI();
    let mean = u.coeffs()[0];
    let two = T::lit(2.0);
    let exp = u.map(grid, |v| (two * (v - mean)).exp());
    let log_term = (integrate_round(grid, &exp)? / four_pi).ln();
    Ok(dirichlet_energy(u) / four_pi - log_term)
}

/// Curvature statistics of `omega_phi`; extrema are taken over the whole sphere.
pub fn scalar_stats<T: Scalar>(grid: &SpectralGrid<T>, m: &MetricData<T>) -> ScalarStats<T> {
    let (_, r_avg, l2_r_defect) = residual_for_metric(grid, m);
    let (r_min, r_max) = extrema(grid, &m.scalar);
    ScalarStats { r_avg, r_min, r_max, l2_r_defect }
}

/// `integral R (Ric(omega_phi) - omega)`: the k = 1 mixed-metric integrand.
/// Reported for inspection only; no monotonicity is claimed for it.
pub fn mixed_curvature_integral<T: Scalar>(bg: &Background<T>, m: &MetricData<T>) -> T {
    let diff: Vec<T> = m.ric_rho_phi.values().iter().zip(bg.rho.values()).map(|(&a, &b)| a - b).collect();
    integrate_product(&bg.grid, m.scalar.values(), &diff)
}

pub fn energy_report_for_metric<T: Scalar>(bg: &Background<T>, m: &MetricData<T>) -> Result<EnergyReport<T>> {
    let g = &*bg.grid;
    let stats = scalar_stats(g, m);
    let vol_min_ratio = m
        .rho_phi
        .values()
        .iter()
        .zip(bg.rho.values())
        .map(|(&a, &b)| a / b)
        .fold(T::infinity(), T::min);
    Ok(EnergyReport {
        e0: energy_leading_for_metric(bg, m, 0)?,
        e1: energy_leading_for_metric(bg, m, 1)?,
        el0_residual_norm: stats.l2_r_defect.sqrt(),
        r_avg: stats.r_avg,
        r_min: stats.r_min,
        r_max: stats.r_max,
        l2_r_defect: stats.l2_r_defect,
        vol_min_ratio,
    })
}

pub fn energy_report<T: Scalar>(bg: &Background<T>, phi: &SymField<T>) -> Result<EnergyReport<T>> {
    let m = metric_from_potential(bg, phi)?;
    energy_report_for_metric(bg, &m)
}

/// Trapezoidal time integral of a sampled series.
pub fn accumulate_time_integral<T: Scalar>(series: &[(T, T)]) -> Result<T> {
    let mut acc = T::zero();
    for (i, w) in series.windows(2).enumerate() {
        let (t0, v0) = w[0];
        let (t1, v1) = w[1];
        if t1 < t0 {
            return Err(Error::UnsortedSeries { index: i + 1 });
        }
        acc += (t1 - t0) * (v0 + v1) / T::lit(2.0);
    }
    Ok(acc)
}

/// Least-squares fit of `log(value) = a - rate * t` over the last
/// `tail_fraction` of the samples. Returns `(rate, r_squared)`.
pub fn fit_exponential_rate<T: Scalar>(series: &[(T, T)], tail_fraction: T) -> Result<(T, T)> {
    let n = series.len();
    let take = (tail_fraction * T::from_usize_lossy(n)).ceil().to_usize().unwrap_or(n).clamp(2.min(n), n);
    let start = n - take;
    let window = &series[start..];
    let mut pts = Vec::with_capacity(window.len());
    for (i, &(t, v)) in window.iter().enumerate() {
        if !(v > T::zero()) {
            return Err(Error::NonPositiveInWindow { index: start + i, value: v.as_f64() });
        }
        pts.push((t, v.ln()));
    }
    if pts.len() < 2 {
        return Ok((T::zero(), T::one()));
    }
    let m = T::from_usize_lossy(pts.len());
    let t_mean = pts.iter().map(|p| p.0).sum::<T>() / m;
    let y_mean = pts.iter().map(|p| p.1).sum::<T>() / m;
    let sxx: T = pts.iter().map(|p| (p.0 - t_mean).powi(2)).sum();
    let sxy: T = pts.iter().map(|p| (p.0 - t_mean) * (p.1 - y_mean)).sum();
    let syy: T = pts.iter().map(|p| (p.1 - y_mean).powi(2)).sum();
    let slope = if sxx > T::zero() { sxy / sxx } else { T::zero() };
    let ss_res: T = pts.iter().map(|p| (p.1 - y_mean - slope * (p.0 - t_mean)).powi(2)).sum();
    let r2 = if syy > T::zero() { T::one() - ss_res / syy } else { T::one() };
    Ok((-slope, r2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::build_grid;
    use std::sync::Arc;

    fn round(n: usize) -> Background<f64> {
        Background::round(Arc::new(build_grid(n).unwrap()))
    }

    #[test]
    fn energies_vanish_at_fixed_point() {
        let bg = round(32);
        let z = SymField::zeros(&bg.grid);
        assert_eq!(energy_leading(&bg, &z, 0).unwrap(), 0.0);
        assert_eq!(energy_leading(&bg, &z, 1).unwrap(), 0.0);
        assert!(matches!(energy_leading(&bg, &z, 2), Err(Error::UnsupportedOrder(2))));
    }

    /// Independent route: the same integral at twice the resolution, built
    /// from the closed-form potential rather than from the coarse field.
    fn e0_oracle(n: usize, a: f64) -> f64 {
        let g = build_grid::<f64>(n).unwrap();
        let mut s = 0.0;
        for (&x, &w) in g.nodes().iter().zip(g.weights()) {
            let rho = 1.0 - 3.0 * a * 0.5 * (3.0 * x * x - 1.0);
            s += w * rho * rho.ln();
        }
        2.0 * std::f64::consts::PI * s
    }

    #[test]
    fn e0_of_p2_perturbation_matches_refined_quadrature() {
        let bg = round(48);
        let phi = SymField::legendre(&bg.grid, 2, 0.1).unwrap();
        let e0 = energy_leading(&bg, &phi, 0).unwrap();
        assert!(e0 > 0.0);
        assert!((e0 - e0_oracle(96, 0.1)).abs() < 1e-8, "{e0}");
    }

    #[test]
    fn el_residual_examples() {
        let bg = round(24);
        let (_, n0) = el_residual(&bg, &SymField::zeros(&bg.grid)).unwrap();
        assert!(n0 <= 1e-9);
        let kick = pullback_by_dilation(&bg, &SymField::zeros(&bg.grid), 1.7).unwrap();
        let (_, nk) = el_residual(&bg, &kick).unwrap();
        assert!(nk <= 1e-8, "{nk}");
        let phi = SymField::legendre(&bg.grid, 2, 0.1).unwrap();
        let (_, np) = el_residual(&bg, &phi).unwrap();
        assert!(np > 1e-2);
    }

    #[test]
    fn scalar_stats_examples() {
        let bg = round(48);
        let m = metric_from_potential(&bg, &SymField::zeros(&bg.grid)).unwrap();
        let s = scalar_stats(&bg.grid, &m);
        assert!((s.r_avg - 2.0).abs() < 1e-12);
        assert!(s.l2_r_defect <= 1e-12);

        let phi = SymField::from_modes(&bg.grid, &[(1, 0.05), (2, 0.08), (3, -0.02)]).unwrap();
        let m = metric_from_potential(&bg, &phi).unwrap();
        let s = scalar_stats(&bg.grid, &m);
        assert!((s.r_avg - 2.0).abs() < 1e-8);
        assert!(s.l2_r_defect > 0.0);

        let fine = round(96);
        let phi_f = SymField::from_modes(&fine.grid, &[(1, 0.05), (2, 0.08), (3, -0.02)]).unwrap();
        let mf = metric_from_potential(&fine, &phi_f).unwrap();
        let sf = scalar_stats(&fine.grid, &mf);
        assert!((s.l2_r_defect - sf.l2_r_defect).abs() < 1e-8);
        assert!((s.r_min - sf.r_min).abs() < 1e-8);
    }

    #[test]
    fn invariance_defect_identity_is_zero() {
        let bg = round(32);
        let phi = SymField::legendre(&bg.grid, 2, 0.1).unwrap();
        assert_eq!(invariance_defect(&bg, &phi, 1.0, 0).unwrap(), 0.0);
    }

    #[test]
    fn onofri_zero_and_positive() {
        let g = build_grid::<f64>(64).unwrap();
        assert!(onofri_gap(&g, &SymField::zeros(&g)).unwrap().abs() < 1e-15);
        let u = SymField::from_fn(&g, |x| 0.3 * x);
        let gap = onofri_gap(&g, &u).unwrap();
        // closed form: 0.09 * (8 pi / 3) / 4 pi - log(sinh(0.6) / 0.6)
        let expect = 0.09 * 2.0 / 3.0 - (0.6f64.sinh() / 0.6).ln();
        assert!(gap > 0.0);
        assert!((gap - expect).abs() < 1e-13, "{gap} vs {expect}");
    }

    #[test]
    fn time_integral_examples() {
        let flat: Vec<(f64, f64)> = (0..=10).map(|i| (i as f64 * 0.3, 2.5)).collect();
        assert!((accumulate_time_integral(&flat).unwrap() - 7.5).abs() < 1e-12);
        let decay: Vec<(f64, f64)> = (0..=1000).map(|i| {
            let t = i as f64 * 1e-2;
            (t, (-4.0 * t).exp())
        }).collect();
        assert!((accumulate_time_integral(&decay).unwrap() - 0.25).abs() < 1e-3);
        assert_eq!(accumulate_time_integral::<f64>(&[]).unwrap(), 0.0);
        let bad = [(0.0, 1.0), (1.0, 1.0), (0.5, 1.0)];
        assert_eq!(accumulate_time_integral(&bad).unwrap_err(), Error::UnsortedSeries { index: 2 });
    }

    #[test]
    fn exponential_fit_examples() {
        let exact: Vec<(f64, f64)> = (0..100).map(|i| {
            let t = i as f64 * 0.1;
            (t, (-2.0 * t).exp())
        }).collect();
        let (rate, r2) = fit_exponential_rate(&exact, 0.5).unwrap();
        assert!((rate - 2.0).abs() < 1e-10 && (r2 - 1.0).abs() < 1e-10);

        let wobbly: Vec<(f64, f64)> = (0..200).map(|i| {
            let t = i as f64 * 0.05;
            (t, (-2.0 * t).exp() * (1.0 + 0.01 * t.sin()))
        }).collect();
        let (rate, _) = fit_exponential_rate(&wobbly, 0.5).unwrap();
        assert!((rate - 2.0).abs() < 0.05);

        let flat: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 3.0)).collect();
        let (rate, _) = fit_exponential_rate(&flat, 0.5).unwrap();
        assert_eq!(rate, 0.0);

        let broken = [(0.0, 1.0), (1.0, 0.0)];
        assert!(matches!(fit_exponential_rate(&broken, 1.0), Err(Error::NonPositiveInWindow { index: 1, .. })));
    }
}
