use serde::Serialize;

use crate::error::{Error, Result};
use crate::functionals::{energy_report_for_metric, fit_exponential_rate, mixed_curvature_integral, scalar_stats};
use crate::kahler::{metric_from_potential, metric_with_margin, Background, MetricData};
use crate::scalar::Scalar;
use crate::spectral::{first_moment, SymField};

use super::gauge::{modify_by_automorphism, remove_omega_mean};
use super::step::step;
use super::{FlowConfig, FlowState, Scheme};

/// Smallest step the controller will try before giving up.
pub const DT_FLOOR: f64 = 1e-12;

/// Largest nodal change of `phi` an adaptive step may make.
const MAX_UPDATE: f64 = 0.5;

/// One line of the diagnostics stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiagnosticsRecord<T> {
    pub t: T,
    pub dt: T,
    pub e0: T,
    pub e1: T,
    pub r_min: T,
    pub r_max: T,
    pub r_avg: T,
    pub l2_r_defect: T,
    pub vol_min_ratio: T,
    pub x_moment: T,
    pub lambda_gauge: T,
    pub el0_residual_norm: T,
}

impl<T: Scalar> DiagnosticsRecord<T> {
    /// `max |R - r|` over the sphere.
    pub fn r_sup_defect(&self) -> T {
        (self.r_max - self.r_avg).max(self.r_avg - self.r_min)
    }
}

/// Conserved quantities at a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConservationSample<T> {
    pub t: T,
    pub volume: T,
    /// `integral R omega_phi`
    pub total_curvature: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    TimeLimit,
}

#[derive(Debug, Clone)]
pub struct RunReport<T> {
    pub records: Vec<DiagnosticsRecord<T>>,
    pub conservation: Vec<ConservationSample<T>>,
    /// `(t, integral R (Ric(omega_phi) - omega))` at each sample.
    pub mixed_k1: Vec<(T, T)>,
    pub final_state: FlowState<T>,
    pub stop: StopReason,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
    /// Smallest `omega_phi / omega` seen at any sample.
    pub vol_floor: T,
    /// `(rate, r_squared)` of `max |R - r|` over the final half, when fittable.
    pub rate_fit: Option<(T, T)>,
}

impl<T: Scalar> RunReport<T> {
    pub fn converged(&self) -> bool {
        self.stop == StopReason::Converged
    }

    /// Time series of one record field.
    pub fn series(&self, f: impl Fn(&DiagnosticsRecord<T>) -> T) -> Vec<(T, T)> {
        self.records.iter().map(|r| (r.t, f(r))).collect()
    }
}

/// Nodal `max |R - r|`, the stopping criterion.
/// `max |R - r|` over the sphere, measured the same way as the diagnostics records.
fn curvature_defect<T: Scalar>(bg: &Background<T>, m: &MetricData<T>) -> T {
    let s = scalar_stats(&bg.grid, m);
    (s.r_max - s.r_avg).max(s.r_avg - s.r_min)
}

/// Step size the scheme's explicit part tolerates on the current metric.
///
/// The linearization of `log(omega_phi)` in `phi` is `laplace / rho_phi`.
/// RK4 sees all of it; the IMEX scheme only sees the departure from the
/// implicit `laplace`, i.e. `(1 / rho_phi - 1) laplace`.
fn stability_cap<T: Scalar>(scheme: Scheme, bg: &Background<T>, m: &MetricData<T>) -> T {
    let l = bg.grid.max_degree();
    let spectral_radius = T::from_usize_lossy(l * (l + 1)) / T::lit(2.0);
    let inv = m.rho_phi.values().iter().map(|&r| T::one() / r);
    match scheme {
        Scheme::ExplicitRk4 => {
            let a = inv.fold(T::zero(), T::max);
            T::lit(2.5) / (spectral_radius * a + T::one())
        }
        Scheme::Imex => {
            let b = inv.fold(T::zero(), |acc, a| acc.max((a - T::one()).abs()));
            if b > T::zero() {
                T::one() / (spectral_radius * b)
            } else {
                T::infinity()
            }
        }
    }
}

/// Integrates the flow from `phi0` with no per-sample observer.
pub fn run_flow<T: Scalar>(bg: &Background<T>, config: &FlowConfig<T>, phi0: &SymField<T>) -> Result<RunReport<T>> {
    run_flow_with(bg, config, phi0, |_, _| Ok(()))
}

/// Integrates the flow from `phi0`, calling `observer` at every diagnostic sample.
///
/// Samples fall exactly on multiples of `sample_every` (steps are truncated to
/// hit them), plus one final sample at the stopping time.
pub fn run_flow_with<T: Scalar, F>(
    bg: &Background<T>,
    config: &FlowConfig<T>,
    phi0: &SymField<T>,
    mut observer: F,
) -> Result<RunReport<T>>
where
    F: FnMut(&FlowState<T>, &DiagnosticsRecord<T>) -> Result<()>,
{
    config.validate()?;
    let g = &*bg.grid;
    let tol = &config.tolerances;
    metric_from_potential(bg, phi0)?;

    let mut state = FlowState::new(phi0.canonical(g));
    if config.gauge_fix_constant {
        state.phi = remove_omega_mean(bg, &state.phi).canonical(g);
    }

    let mut report = RunReport {
        records: Vec::new(),
        conservation: Vec::new(),
        mixed_k1: Vec::new(),
        final_state: state.clone(),
        stop: StopReason::TimeLimit,
        steps_accepted: 0,
        steps_rejected: 0,
        vol_floor: T::infinity(),
        rate_fit: None,
    };

    let mut dt = config.dt_init;
    let mut metric = metric_from_potential(bg, &state.phi)?;
    if config.adapt {
        dt = dt.min(stability_cap(config.scheme, bg, &metric));
    }
    sample(bg, config, &mut state, dt, &mut report, &mut observer)?;
    metric = metric_from_potential(bg, &state.phi)?;
    let mut converged = curvature_defect(bg, &metric) <= config.convergence_tol;
    let mut next_index = 1usize;

    let eps_t = T::lit(1e-12);
    loop {
        if converged && config.stop_on_convergence {
            report.stop = StopReason::Converged;
            break;
        }
        if state.t >= config.t_max - eps_t * config.t_max.max(T::one()) {
            break;
        }
        let next_sample = config.sample_every * T::from_usize_lossy(next_index);
        let target = next_sample.min(config.t_max);
        let remaining = target - state.t;
        let truncated = dt >= remaining - eps_t * target.max(T::one());
        let h = if truncated { remaining } else { dt };

        let attempt = step(config.scheme, bg, &state, h, tol.cone_margin);
        let mut candidate = match attempt {
            Ok(s) => s,
            Err(Error::StepRejected { suggested_dt }) => {
                report.steps_rejected += 1;
                dt = (h / T::lit(2.0)).min(T::lit(suggested_dt));
                if dt < T::lit(DT_FLOOR) {
                    return Err(Error::DtUnderflow { t: state.t.as_f64(), dt: dt.as_f64() });
                }
                continue;
            }
            Err(e) => return Err(e),
        };
        if config.adapt {
            let change = candidate.phi.sub(&state.phi);
            let change = if config.gauge_fix_constant { remove_omega_mean(bg, &change) } else { change };
            if change.sup_norm() > T::lit(MAX_UPDATE) {
                report.steps_rejected += 1;
                dt = h / T::lit(2.0);
                if dt < T::lit(DT_FLOOR) {
                    return Err(Error::DtUnderflow { t: state.t.as_f64(), dt: dt.as_f64() });
                }
                continue;
            }
        }
        if config.gauge_fix_constant {
            candidate.phi = remove_omega_mean(bg, &candidate.phi);
        }
        candidate.phi = candidate.phi.canonical(g);
        candidate.t = if truncated { target } else { state.t + h };
        state = candidate;
        report.steps_accepted += 1;

        metric = metric_with_margin(bg, &state.phi, tol.cone_margin)?;
        converged = curvature_defect(bg, &metric) <= config.convergence_tol;
        if config.adapt && !truncated {
            dt = (dt * config.safety_factor).min(config.dt_max).min(stability_cap(config.scheme, bg, &metric));
        } else if config.adapt {
            dt = dt.min(stability_cap(config.scheme, bg, &metric));
        }

        let at_sample = truncated && target == next_sample;
        if at_sample {
            next_index += 1;
        }
        if at_sample || (converged && config.stop_on_convergence) {
            sample(bg, config, &mut state, dt, &mut report, &mut observer)?;
            metric = metric_from_potential(bg, &state.phi)?;
            converged = curvature_defect(bg, &metric) <= config.convergence_tol;
        }
    }
    if report.records.last().map(|r| r.t) != Some(state.t) {
        sample(bg, config, &mut state, dt, &mut report, &mut observer)?;
    }

    let defects = report.series(|r| r.r_sup_defect());
    if defects.len() >= 4 {
        report.rate_fit = fit_exponential_rate(&defects, T::lit(0.5)).ok();
    }
    report.final_state = state;
    Ok(report)
}

fn sample<T: Scalar, F>(
    bg: &Background<T>,
    config: &FlowConfig<T>,
    state: &mut FlowState<T>,
    dt: T,
    report: &mut RunReport<T>,
    observer: &mut F,
) -> Result<()>
where
    F: FnMut(&FlowState<T>, &DiagnosticsRecord<T>) -> Result<()>,
{
    let g = &*bg.grid;
    if config.automorphism_modification {
        let tol = &config.tolerances;
        let fix = modify_by_automorphism(bg, state, tol.newton_tol, tol.max_newton_iters)?;
        *state = fix.state;
        state.phi = state.phi.canonical(g);
    }
    let m = metric_from_potential(bg, &state.phi)?;
    let e = energy_report_for_metric(bg, &m)?;
    let record = DiagnosticsRecord {
        t: state.t,
        dt,
        e0: e.e0,
        e1: e.e1,
        r_min: e.r_min,
        r_max: e.r_max,
        r_avg: e.r_avg,
        l2_r_defect: e.l2_r_defect,
        vol_min_ratio: e.vol_min_ratio,
        x_moment: first_moment(&state.phi),
        lambda_gauge: state.lambda_gauge,
        el0_residual_norm: e.el0_residual_norm,
    };
    report.vol_floor = report.vol_floor.min(e.vol_min_ratio);
    report.conservation.push(ConservationSample { t: state.t, volume: m.volume, total_curvature: m.total_curvature(g) });
    report.mixed_k1.push((state.t, mixed_curvature_integral(bg, &m)));
    state.samples += 1;
    report.records.push(record);
    observer(state, &record)
}
