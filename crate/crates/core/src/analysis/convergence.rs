use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::energy::{hamiltonian, EnergyBudget};
use crate::integrator::{Crossing, EventKind, EventSpec, Trajectory};
use crate::model::OvflField;

const MIN_FIT_SAMPLES: usize = 10;
/// Energies below this are treated as "at rest" and excluded from the fit.
const ENERGY_FLOOR: f64 = 1e-24;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub epsilon: f64,
    /// Whether `|(X_1 - X_inf, Y_1)|` drops below `epsilon`.
    pub entered_ball: bool,
    pub entry_time: Option<f64>,
    /// First crossing of `X_1 = X_inf`.
    pub t_infinity: Option<f64>,
    /// First time `|X_1 - X_inf| < epsilon / 3`.
    pub t_infinity_eps: Option<f64>,
    /// Number of zeros of `Y_1` along the trajectory.
    pub sign_changes: usize,
    /// Least-squares slope of `-ln H` after `t_infinity_eps`.
    pub fitted_rate: Option<f64>,
    /// Largest `r` with `H(t) <= H(T) exp(-r (t - T))` after `T = t_infinity_eps`.
    pub envelope_rate: Option<f64>,
    /// Rate predicted by the energy constants.
    pub gronwall_rate: f64,
    pub fit_samples: usize,
}

/// First time `f` drops below zero, or the start time if it starts there.
fn first_below(traj: &Trajectory, kind: EventKind, f: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static) -> Option<f64> {
    if f(traj.t_start(), &traj.states()[0]) < 0.0 {
        return Some(traj.t_start());
    }
    let spec = EventSpec::root(kind, 1, Crossing::Falling, f);
    traj.detect_event(&spec).map(|e| e.time)
}

/// Convergence of the leading pair towards `(X_inf, 0)`.
pub fn convergence_diagnostics(
    traj: &Trajectory,
    field: &OvflField,
    budget: &EnergyBudget,
    epsilon: f64,
) -> Result<ConvergenceReport, AnalysisError> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(AnalysisError::Validation(format!("epsilon must be positive, got {epsilon}")));
    }
    let f = *field;
    let x_inf = field.x_infinity();

    let entry_time = first_below(traj, EventKind::TInfinityEps, move |_, s| {
        let (x, y) = f.first_pair(s);
        (x - x_inf).hypot(y) - epsilon
    });
    let t_infinity = if f.first_pair(&traj.states()[0]).0 == x_inf {
        Some(traj.t_start())
    } else {
        let spec = EventSpec::root(EventKind::TInfinity, 1, Crossing::Either, move |_, s| f.first_pair(s).0 - x_inf);
        traj.detect_event(&spec).map(|e| e.time)
    };
    let t_infinity_eps = first_below(traj, EventKind::TInfinityEps, move |_, s| {
        (f.first_pair(s).0 - x_inf).abs() - epsilon / 3.0
    });
    let sign_spec = EventSpec::root(EventKind::YSignChange, 1, Crossing::Either, move |_, s| f.first_pair(s).1);
    let sign_changes = traj.detect_events(&sign_spec).len();

    let mut report = ConvergenceReport {
        epsilon,
        entered_ball: entry_time.is_some(),
        entry_time,
        t_infinity,
        t_infinity_eps,
        sign_changes,
        fitted_rate: None,
        envelope_rate: None,
        gronwall_rate: budget.gronwall_rate,
        fit_samples: 0,
    };
    let Some(t0) = t_infinity_eps else {
        return Ok(report);
    };

    let window: Vec<(f64, f64)> = traj
        .times()
        .iter()
        .zip(traj.states())
        .filter(|(t, _)| **t >= t0)
        .map(|(t, s)| {
            let (x, y) = f.first_pair(s);
            hamiltonian(&f.params, x, y).map(|h| (*t, h))
        })
        .collect::<Result<_, _>>()?;
    if window.len() < MIN_FIT_SAMPLES {
        return Err(AnalysisError::InsufficientData { found: window.len(), needed: MIN_FIT_SAMPLES });
    }
    let (ta, ha) = window[0];
    if ha > ENERGY_FLOOR {
        let envelope = window[1..]
            .iter()
            .filter(|(t, _)| *t > ta)
            .map(|&(t, h)| -(h.max(ENERGY_FLOOR) / ha).ln() / (t - ta))
            .fold(f64::INFINITY, f64::min);
        report.envelope_rate = envelope.is_finite().then_some(envelope);
    }

    // fit ln H on the decaying part, stopping before roundoff dominates
    let cutoff = ha * 1e-10;
    let fit: Vec<(f64, f64)> = window
        .iter()
        .take_while(|(_, h)| *h > cutoff.max(ENERGY_FLOOR))
        .map(|&(t, h)| (t, h.ln()))
        .collect();
    report.fit_samples = fit.len();
    if fit.len() >= MIN_FIT_SAMPLES {
        let n = fit.len() as f64;
        let mt = fit.iter().map(|p| p.0).sum::<f64>() / n;
        let ml = fit.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = fit.iter().map(|p| (p.0 - mt) * (p.1 - ml)).sum();
        let sxx: f64 = fit.iter().map(|p| (p.0 - mt).powi(2)).sum();
        if sxx > 0.0 {
            report.fitted_rate = Some(-sxy / sxx);
        }
    }
    Ok(report)
}
