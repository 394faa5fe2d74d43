use crate::error::{Error, Result};
use crate::kahler::{metric_from_potential, Background};
use crate::scalar::Scalar;
use crate::spectral::{evaluate, first_moment, SymField};

use super::FlowState;

/// `phi` minus its `omega`-mean. Leaves `omega_phi` untouched.
pub fn remove_omega_mean<T: Scalar>(bg: &Background<T>, phi: &SymField<T>) -> SymField<T> {
    phi.shift(-bg.omega_mean(phi))
}

/// Projects the free constant out of the potential.
pub fn gauge_fix_constant<T: Scalar>(bg: &Background<T>, state: &FlowState<T>) -> FlowState<T> {
    FlowState { phi: remove_omega_mean(bg, &state.phi), ..state.clone() }
}

/// The dilation `z -> lam z` in the `x = cos(theta)` chart.
pub fn dilation_map<T: Scalar>(x: T, lam: T) -> T {
    let l2 = lam * lam;
    let a = T::one() + x;
    let b = l2 * (T::one() - x);
    (a - b) / (a + b)
}

/// Area Jacobian of the dilation, `4 lam^2 / ((1 + x) + lam^2 (1 - x))^2`,
/// i.e. the density of the pulled-back round form.
pub fn dilation_conformal_factor<T: Scalar>(x: T, lam: T) -> T {
    let l2 = lam * lam;
    let d = (T::one() + x) + l2 * (T::one() - x);
    T::lit(4.0) * l2 / (d * d)
}

/// Relative potential of the pulled-back round form:
/// `sigma* omega_0 = omega_0 + i dd-bar (2 log((1 + x) + lam^2 (1 - x)))`.
pub fn dilation_potential<T: Scalar>(x: T, lam: T) -> T {
    let l2 = lam * lam;
    T::lit(2.0) * ((T::one() + x) + l2 * (T::one() - x)).ln()
}

/// Potential of `sigma_lam* omega_phi` relative to the fixed background,
/// normalized to zero `omega`-mean.
pub fn pullback_by_dilation<T: Scalar>(bg: &Background<T>, phi: &SymField<T>, lam: T) -> Result<SymField<T>> {
    if !(lam > T::zero()) || !lam.is_finite() {
        return Err(Error::InvalidDilation(lam.as_f64()));
    }
    if lam == T::one() {
        return Ok(phi.clone());
    }
    let g = &*bg.grid;
    let total = bg.psi.add(phi);
    let values = g
        .nodes()
        .iter()
        .zip(bg.psi.values())
        .map(|(&x, &psi)| dilation_potential(x, lam) + evaluate(&total, dilation_map(x, lam)) - psi)
        .collect();
    let pulled = remove_omega_mean(bg, &SymField::from_values(g, values)?);
    metric_from_potential(bg, &pulled)?;
    Ok(pulled)
}

/// Outcome of one automorphism re-centering.
#[derive(Debug, Clone, PartialEq)]
pub struct AutomorphismFix<T> {
    pub state: FlowState<T>,
    /// Dilation applied in this call.
    pub lambda: T,
    /// `integral phi x dA` after the fix.
    pub moment: T,
    pub iterations: usize,
}

/// Pulls the potential back by the dilation that makes it orthogonal to the
/// first eigenspace (`P_1 = x` under S1 symmetry). Scalar Newton in `log lam`.
pub fn modify_by_automorphism<T: Scalar>(
    bg: &Background<T>,
    state: &FlowState<T>,
    tol: T,
    max_iters: usize,
) -> Result<AutomorphismFix<T>> {
    let moment_at = |mu: T| -> Result<(SymField<T>, T)> {
        let p = pullback_by_dilation(bg, &state.phi, mu.exp())?;
        let m = first_moment(&p);
        Ok((p, m))
    };
    let m0 = first_moment(&state.phi);
    if m0.abs() <= tol {
        return Ok(AutomorphismFix { state: state.clone(), lambda: T::one(), moment: m0, iterations: 0 });
    }
    let h = T::lit(1e-5);
    let mut mu = T::zero();
    let mut current = (state.phi.clone(), m0);
    for iter in 0..max_iters {
        let (_, m_plus) = moment_at(mu + h)?;
        let (_, m_minus) = moment_at(mu - h)?;
        let slope = (m_plus - m_minus) / (h + h);
        if slope == T::zero() || !slope.is_finite() {
            break;
        }
        let mut step = -current.1 / slope;
        let mut accepted = None;
        for _ in 0..30 {
            match moment_at(mu + step) {
                Ok(trial) if trial.1.abs() < current.1.abs() => {
                    accepted = Some(trial);
                    break;
                }
                _ => step = step / T::lit(2.0),
            }
        }
        let Some(trial) = accepted else { break };
        mu += step;
        current = trial;
        if current.1.abs() <= tol {
            let lambda = mu.exp();
            let next = FlowState { phi: current.0, lambda_gauge: state.lambda_gauge * lambda, ..state.clone() };
            return Ok(AutomorphismFix { state: next, lambda, moment: current.1, iterations: iter + 1 });
        }
    }
    Err(Error::NewtonDiverged { iters: max_iters, moment: current.1.as_f64() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::scalar_stats;
    use crate::spectral::{build_grid, integrate_round, laplace_round};
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn round(n: usize) -> Background<f64> {
        Background::round(Arc::new(build_grid(n).unwrap()))
    }

    #[test]
    fn constant_gauge_examples() {
        let bg: Background<f64> = Background::from_modes(Arc::new(build_grid(32).unwrap()), &[(2, 0.05)]).unwrap();
        let g = &bg.grid;
        let s = gauge_fix_constant(&bg, &FlowState::new(SymField::constant(g, 5.0)));
        assert!(s.phi.sup_norm() < 1e-12);

        let mean_free = remove_omega_mean(&bg, &SymField::legendre(g, 3, 0.2).unwrap());
        let again = remove_omega_mean(&bg, &mean_free);
        assert!(again.sub(&mean_free).sup_norm() < 1e-15);

        // 1 + x: subtract integral (1 + x) rho dA / integral rho dA, computed by hand.
        let phi = SymField::from_fn(g, |x| 1.0 + x);
        let weighted = phi.zip_map(g, &bg.rho, |a, b| a * b);
        let c = integrate_round(g, &weighted).unwrap() / integrate_round(g, &bg.rho).unwrap();
        let fixed = remove_omega_mean(&bg, &phi);
        for (&x, &v) in g.nodes().iter().zip(fixed.values()) {
            assert!((v - (1.0 + x - c)).abs() < 1e-14);
        }
        assert!(bg.omega_mean(&fixed).abs() < 1e-12);
    }

    #[test]
    fn jacobian_is_potential_laplacian() {
        let g = build_grid::<f64>(64).unwrap();
        let lam = 1.8;
        let psi = SymField::from_fn(&g, |x| dilation_potential(x, lam));
        let lap = laplace_round(&g, &psi).unwrap();
        for (&x, &v) in g.nodes().iter().zip(lap.values()) {
            assert!((1.0 + v - dilation_conformal_factor(x, lam)).abs() < 1e-10);
        }
    }

    #[test]
    fn identity_dilation() {
        let bg = round(32);
        let phi = SymField::from_modes(&bg.grid, &[(0, 1.0), (2, 0.1)]).unwrap();
        assert_eq!(pullback_by_dilation(&bg, &phi, 1.0).unwrap(), phi);
        assert!(pullback_by_dilation(&bg, &phi, 0.0).is_err());
    }

    #[test]
    fn pulled_back_round_metric_stays_einstein() {
        // R involves four derivatives of the potential, so round-off grows
        // quickly with n; 32 nodes already resolve the dilation potential.
        let bg = round(32);
        let p = pullback_by_dilation(&bg, &SymField::zeros(&bg.grid), 2.0).unwrap();
        let m = metric_from_potential(&bg, &p).unwrap();
        assert!((m.volume - 4.0 * PI).abs() < 1e-10);
        assert!(m.scalar.values().iter().all(|r| (r - 2.0).abs() < 1e-7));
    }

    #[test]
    fn group_law() {
        let bg = Background::from_modes(Arc::new(build_grid(96).unwrap()), &[(2, 0.03)]).unwrap();
        let phi = SymField::from_modes(&bg.grid, &[(1, 0.02), (2, 0.05), (3, 0.01)]).unwrap();
        let two_step = pullback_by_dilation(&bg, &pullback_by_dilation(&bg, &phi, 1.5).unwrap(), 0.7).unwrap();
        let one_step = pullback_by_dilation(&bg, &phi, 1.05).unwrap();
        assert!(two_step.sub(&one_step).sup_norm() < 1e-8);
    }

    #[test]
    fn modification_examples() {
        let bg = round(64);
        let g = &bg.grid;
        let even = SymField::legendre(g, 2, 0.1).unwrap();
        let fix = modify_by_automorphism(&bg, &FlowState::new(even.clone()), 1e-10, 50).unwrap();
        assert_eq!(fix.lambda, 1.0);
        assert_eq!(fix.state.phi, even);

        let kicked = pullback_by_dilation(&bg, &SymField::zeros(g), 2.0).unwrap();
        let fix = modify_by_automorphism(&bg, &FlowState::new(kicked), 1e-10, 50).unwrap();
        assert!((fix.lambda - 0.5).abs() < 1e-8, "{}", fix.lambda);
        assert!(fix.state.phi.sup_norm() < 1e-8);
        assert!(fix.moment.abs() <= 1e-10);
        assert!((fix.state.lambda_gauge - 0.5).abs() < 1e-8);
    }

    #[test]
    fn modification_is_metric_neutral() {
        let bg = round(32);
        let g = &bg.grid;
        let phi = SymField::from_modes(g, &[(1, 0.05), (2, 0.04), (3, -0.01)]).unwrap();
        let before = scalar_stats(g, &metric_from_potential(&bg, &phi).unwrap());
        let fix = modify_by_automorphism(&bg, &FlowState::new(phi), 1e-10, 50).unwrap();
        assert!(fix.lambda != 1.0);
        let m = metric_from_potential(&bg, &fix.state.phi).unwrap();
        let after = scalar_stats(g, &m);
        assert!((before.r_min - after.r_min).abs() < 1e-8);
        assert!((before.r_max - after.r_max).abs() < 1e-8);
        assert!((before.l2_r_defect - after.l2_r_defect).abs() < 1e-8);
        assert!((m.volume - 4.0 * PI).abs() < 1e-9);
    }
}
