use crate::error::{Error, Result};
use crate::kahler::{metric_with_margin, Background, DEGENERATE_DENSITY};
use crate::scalar::Scalar;
use crate::spectral::SymField;

use super::{FlowState, Scheme};

/// `log(omega_phi / omega) + phi - h` at the nodes.
pub fn flow_rhs<T: Scalar>(bg: &Background<T>, phi: &SymField<T>) -> Result<SymField<T>> {
    rhs_with_margin(bg, phi, T::lit(DEGENERATE_DENSITY))
}

fn rhs_with_margin<T: Scalar>(bg: &Background<T>, phi: &SymField<T>, margin: T) -> Result<SymField<T>> {
    let g = &*bg.grid;
    let m = metric_with_margin(bg, phi, margin)?;
    let values = m
        .log_ratio
        .values()
        .iter()
        .zip(phi.values())
        .zip(bg.h.values())
        .map(|((&l, &p), &h)| l + p - h)
        .collect();
    SymField::from_values(g, values)
}

/// Turns a cone violation inside a step into a rejection with a smaller step.
fn guard<T: Scalar, R>(r: Result<R>, dt: T) -> Result<R> {
    r.map_err(|e| match e {
        Error::KahlerConeViolation { .. } => Error::StepRejected { suggested_dt: dt.as_f64() / 2.0 },
        other => other,
    })
}

/// Classical RK4 step of size `dt`. Any stage whose density falls below
/// `cone_margin` rejects the whole step.
pub fn step_explicit<T: Scalar>(
    bg: &Background<T>,
    state: &FlowState<T>,
    dt: T,
    cone_margin: T,
) -> Result<FlowState<T>> {
    let phi = &state.phi;
    let half = dt / T::lit(2.0);
    let k1 = guard(rhs_with_margin(bg, phi, cone_margin), dt)?;
    let k2 = guard(rhs_with_margin(bg, &phi.axpby(T::one(), &k1, half), cone_margin), dt)?;
    let k3 = guard(rhs_with_margin(bg, &phi.axpby(T::one(), &k2, half), cone_margin), dt)?;
    let k4 = guard(rhs_with_margin(bg, &phi.axpby(T::one(), &k3, dt), cone_margin), dt)?;
    let sixth = dt / T::lit(6.0);
    let third = dt / T::lit(3.0);
    let next = phi
        .axpby(T::one(), &k1, sixth)
        .axpby(T::one(), &k2, third)
        .axpby(T::one(), &k3, third)
        .axpby(T::one(), &k4, sixth);
    guard(metric_with_margin(bg, &next, cone_margin), dt)?;
    Ok(FlowState { t: state.t + dt, phi: next, ..state.clone() })
}

/// Symbol of the implicitly treated operator on degree `l`: the linearization
/// `laplace + 1` at the round fixed point, `1 - l(l+1)/2`.
///
/// The constant mode (`l = 0`, symbol `+1`) is handed to the explicit part
/// instead; it carries no geometry and is removed by the constant gauge.
pub fn imex_symbol<T: Scalar>(l: usize) -> T {
    if l == 0 {
        T::zero()
    } else {
        T::one() - T::from_usize_lossy(l * (l + 1)) / T::lit(2.0)
    }
}

// ARS(2,2,2): L-stable SDIRK implicit part, stiffly accurate.
fn ars_gamma<T: Scalar>() -> T {
    T::one() - T::one() / T::lit(2.0).sqrt()
}

fn ars_delta<T: Scalar>() -> T {
    T::one() - T::one() / (T::lit(2.0) * ars_gamma::<T>())
}

/// Amplification factor of one IMEX step on the linearized problem for a
/// mode of degree `l >= 1`.
pub fn imex_linear_multiplier<T: Scalar>(l: usize, dt: T) -> T {
    let z = dt * imex_symbol::<T>(l);
    let g = ars_gamma::<T>();
    let denom = T::one() - g * z;
    let y2 = T::one() / denom;
    (T::one() + (T::one() - g) * z * y2) / denom
}

/// One ARS(2,2,2) step: `(laplace + 1) phi` implicit (diagonal in Legendre
/// modes), the remaining nonlinearity explicit.
pub fn step_imex<T: Scalar>(
    bg: &Background<T>,
    state: &FlowState<T>,
    dt: T,
    cone_margin: T,
) -> Result<FlowState<T>> {
    let g = &*bg.grid;
    let n = g.n_nodes();
    let gamma = ars_gamma::<T>();
    let delta = ars_delta::<T>();
    let symbols: Vec<T> = (0..n).map(imex_symbol).collect();
    let explicit = |phi: &SymField<T>| -> Result<Vec<T>> {
        let r = guard(rhs_with_margin(bg, phi, cone_margin), dt)?;
        Ok(r.coeffs().iter().zip(phi.coeffs()).zip(&symbols).map(|((&r, &p), &s)| r - s * p).collect())
    };
    let solve = |rhs: Vec<T>| -> Result<SymField<T>> {
        let c = rhs.iter().zip(&symbols).map(|(&v, &s)| v / (T::one() - gamma * dt * s)).collect();
        SymField::from_coeffs(g, c)
    };
    let y1 = state.phi.coeffs();
    let e1 = explicit(&state.phi)?;
    let y2 = solve(y1.iter().zip(&e1).map(|(&y, &e)| y + dt * gamma * e).collect())?;
    let e2 = explicit(&y2)?;
    let one_minus_gamma = T::one() - gamma;
    let one_minus_delta = T::one() - delta;
    let rhs3 = (0..n)
        .map(|l| {
            y1[l] + dt * (delta * e1[l] + one_minus_delta * e2[l]) + dt * one_minus_gamma * symbols[l] * y2.coeffs()[l]
        })
        .collect();
    let y3 = solve(rhs3)?;
    guard(metric_with_margin(bg, &y3, cone_margin), dt)?;
    Ok(FlowState { t: state.t + dt, phi: y3, ..state.clone() })
}

/// Dispatches on the configured scheme.
pub fn step<T: Scalar>(
    scheme: Scheme,
    bg: &Background<T>,
    state: &FlowState<T>,
    dt: T,
    cone_margin: T,
) -> Result<FlowState<T>> {
    match scheme {
        Scheme::ExplicitRk4 => step_explicit(bg, state, dt, cone_margin),
        Scheme::Imex => step_imex(bg, state, dt, cone_margin),
    }
}
