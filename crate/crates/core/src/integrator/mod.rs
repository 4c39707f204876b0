//! Adaptive Dormand–Prince 5(4) integration with dense output and events.
//!
//! Step control is a PI controller on the scaled RMS error. Near the
//! collision singularity the step is additionally capped by
//! `c * gap^2 / beta` (see [`VectorField::singular_step_cap`]) so that the
//! stiff `beta / gap^2` relaxation stays resolved.

mod dopri;
mod events;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ModelError, VectorField};
use dopri::*;

pub use dopri::DenseSegment;
pub use events::{Crossing, Event, EventKind, EventSpec, ScalarFn, Trigger, EVENT_TIME_TOL};
use events::Tracker;

/// Smallest admissible step before integration is declared failed.
pub const MIN_STEP: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegratorError {
    #[error("step size underflow (h = {h:e}) at t = {t}; the problem is too stiff or singular")]
    StiffnessFailure { t: f64, h: f64, state: Vec<f64> },
    #[error("invalid integrator input: {0}")]
    Validation(String),
    #[error("time {t} outside trajectory interval [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    pub t_end: f64,
    /// Gap at or below which a collision-guard event terminates the run.
    pub singular_guard: f64,
    /// `c` in the near-singularity cap `h <= c * gap^2 / beta`.
    pub step_cap_coefficient: f64,
    /// When set, take exactly this step without error control (used for order studies).
    pub fixed_step: Option<f64>,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            max_step: 0.05,
            t_end: 100.0,
            singular_guard: 1e-9,
            step_cap_coefficient: 0.5,
            fixed_step: None,
        }
    }
}

impl IntegratorConfig {
    pub fn with_t_end(mut self, t_end: f64) -> Self {
        self.t_end = t_end;
        self
    }

    pub fn with_tolerances(mut self, rtol: f64, atol: f64) -> Self {
        self.rtol = rtol;
        self.atol = atol;
        self
    }

    pub fn validate(&self) -> Result<(), IntegratorError> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(IntegratorError::Validation(format!("{name} must be positive, got {v}")))
            }
        };
        positive("rtol", self.rtol)?;
        positive("atol", self.atol)?;
        positive("max_step", self.max_step)?;
        positive("t_end", self.t_end)?;
        positive("singular_guard", self.singular_guard)?;
        positive("step_cap_coefficient", self.step_cap_coefficient)?;
        if let Some(h) = self.fixed_step {
            positive("fixed_step", h)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Completed,
    CollisionGuard,
    TerminalEvent,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// Accepted samples of an integration run with their interpolants.
#[derive(Debug, Clone)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<Vec<f64>>,
    segments: Vec<DenseSegment>,
    pub events: Vec<Event>,
    pub termination: Termination,
    pub stats: Stats,
}

impl Trajectory {
    /// Rebuild a trajectory from stored samples, interpolating with cubic
    /// Hermite polynomials whose end slopes come from `field`.
    pub fn from_samples(
        field: &impl VectorField,
        times: Vec<f64>,
        states: Vec<Vec<f64>>,
    ) -> Result<Self, IntegratorError> {
        if times.is_empty() || times.len() != states.len() {
            return Err(IntegratorError::Validation("empty or mismatched sample table".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(IntegratorError::Validation("sample times must be strictly increasing".into()));
        }
        let dim = field.dim();
        if states.iter().any(|s| s.len() != dim) {
            return Err(IntegratorError::Validation(format!("states must have dimension {dim}")));
        }
        let mut slopes = Vec::with_capacity(states.len());
        for (t, s) in times.iter().zip(&states) {
            let mut f = vec![0.0; dim];
            field.eval(*t, s, &mut f)?;
            slopes.push(f);
        }
        let segments = (1..times.len())
            .map(|k| DenseSegment::Hermite {
                t0: times[k - 1],
                h: times[k] - times[k - 1],
                y0: states[k - 1].clone(),
                y1: states[k].clone(),
                f0: slopes[k - 1].clone(),
                f1: slopes[k].clone(),
            })
            .collect();
        Ok(Self {
            times,
            states,
            segments,
            events: Vec::new(),
            termination: Termination::Completed,
            stats: Stats::default(),
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }

    pub fn segments(&self) -> &[DenseSegment] {
        &self.segments
    }

    pub fn dim(&self) -> usize {
        self.states[0].len()
    }

    pub fn t_start(&self) -> f64 {
        self.times[0]
    }

    pub fn t_final(&self) -> f64 {
        *self.times.last().expect("nonempty")
    }

    pub fn last_state(&self) -> &[f64] {
        self.states.last().expect("nonempty")
    }

    pub fn events_of(&self, kind: EventKind) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(move |e| e.kind == kind)
    }

    /// Interpolated state; stored samples are returned exactly.
    pub fn state_at(&self, t: f64) -> Result<Vec<f64>, IntegratorError> {
        let (start, end) = (self.t_start(), self.t_final());
        if !(t >= start && t <= end) {
            return Err(IntegratorError::OutOfRange { t, start, end });
        }
        let k = self.times.partition_point(|&s| s < t);
        if k < self.times.len() && self.times[k] == t {
            return Ok(self.states[k].clone());
        }
        Ok(self.segments[k - 1].eval(t))
    }

    /// Interpolate at each of `times`.
    pub fn resample(&self, times: &[f64]) -> Result<Vec<Vec<f64>>, IntegratorError> {
        times.iter().map(|&t| self.state_at(t)).collect()
    }

    /// Locate every occurrence of `spec` on the stored dense output.
    pub fn detect_events(&self, spec: &EventSpec) -> Vec<Event> {
        let mut tracker = Tracker::new(spec, self.times[0], &self.states[0]);
        let mut out = Vec::new();
        for (k, seg) in self.segments.iter().enumerate() {
            out.extend(tracker.scan(spec, seg, &self.states[k + 1]));
        }
        out
    }

    /// First occurrence of `spec`, if any.
    pub fn detect_event(&self, spec: &EventSpec) -> Option<Event> {
        self.detect_events(&spec.clone().once()).into_iter().next()
    }
}

fn error_norm(err: &[f64], y0: &[f64], y1: &[f64], cfg: &IntegratorConfig) -> f64 {
    let sum: f64 = err
        .iter()
        .zip(y0.iter().zip(y1))
        .map(|(e, (a, b))| {
            let sc = cfg.atol + cfg.rtol * a.abs().max(b.abs());
            (e / sc).powi(2)
        })
        .sum();
    (sum / err.len() as f64).sqrt()
}

struct Stages {
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
}

fn axpy(out: &mut [f64], y: &[f64], h: f64, terms: &[(f64, &[f64])]) {
    for i in 0..out.len() {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        out[i] = y[i] + h * acc;
    }
}

/// One DP5 step from `(t, y)` with `k[0] = f(t, y)` already filled.
/// On success `y_new` holds the 5th order solution, `k[6] = f(t + h, y_new)`
/// and `err` the embedded error estimate.
fn dopri_step(
    field: &impl VectorField,
    t: f64,
    y: &[f64],
    h: f64,
    st: &mut Stages,
    y_new: &mut [f64],
    err: &mut [f64],
) -> Result<(), ModelError> {
    let Stages { k, tmp } = st;
    let [k1, k2, k3, k4, k5, k6, k7] = k;
    axpy(tmp, y, h, &[(A21, k1)]);
    field.eval(t + C2 * h, tmp, k2)?;
    axpy(tmp, y, h, &[(A31, k1), (A32, k2)]);
    field.eval(t + C3 * h, tmp, k3)?;
    axpy(tmp, y, h, &[(A41, k1), (A42, k2), (A43, k3)]);
    field.eval(t + C4 * h, tmp, k4)?;
    axpy(tmp, y, h, &[(A51, k1), (A52, k2), (A53, k3), (A54, k4)]);
    field.eval(t + C5 * h, tmp, k5)?;
    axpy(tmp, y, h, &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)]);
    field.eval(t + h, tmp, k6)?;
    axpy(y_new, y, h, &[(A71, k1), (A73, k3), (A74, k4), (A75, k5), (A76, k6)]);
    field.eval(t + h, y_new, k7)?;
    for i in 0..y.len() {
        err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
    }
    Ok(())
}

fn dense_segment(t: f64, h: f64, y: &[f64], y_new: &[f64], k: &[Vec<f64>; 7]) -> DenseSegment {
    let n = y.len();
    let mut c = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for i in 0..n {
        let dy = y_new[i] - y[i];
        let bspl = h * k[0][i] - dy;
        c[0][i] = y[i];
        c[1][i] = dy;
        c[2][i] = bspl;
        c[3][i] = dy - h * k[6][i] - bspl;
        c[4][i] = h
            * (D1 * k[0][i] + D3 * k[2][i] + D4 * k[3][i] + D5 * k[4][i] + D6 * k[5][i] + D7 * k[6][i]);
    }
    DenseSegment::Dopri { t0: t, h, coeffs: c }
}

fn initial_step(field: &impl VectorField, t: f64, y: &[f64], f0: &[f64], cfg: &IntegratorConfig) -> f64 {
    let scale = |v: f64| cfg.atol + cfg.rtol * v.abs();
    let d0 = (y.iter().map(|v| (v / scale(*v)).powi(2)).sum::<f64>() / y.len() as f64).sqrt();
    let d1 = (f0.iter().zip(y).map(|(f, v)| (f / scale(*v)).powi(2)).sum::<f64>() / y.len() as f64).sqrt();
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(cfg.max_step);
    let y1: Vec<f64> = y.iter().zip(f0).map(|(v, f)| v + h0 * f).collect();
    let mut f1 = vec![0.0; y.len()];
    if field.eval(t + h0, &y1, &mut f1).is_err() {
        return h0 * 1e-3;
    }
    let d2 = (f1
        .iter()
        .zip(f0)
        .zip(y)
        .map(|((a, b), v)| ((a - b) / scale(*v)).powi(2))
        .sum::<f64>()
        / y.len() as f64)
        .sqrt()
        / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(cfg.max_step)
}

const SAFETY: f64 = 0.9;
const PI_ALPHA: f64 = 0.17;
const PI_BETA: f64 = 0.04;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

/// Integrate `field` from `(t0, y0)` to `t0 + cfg.t_end`.
pub fn integrate(
    field: &impl VectorField,
    t0: f64,
    y0: &[f64],
    cfg: &IntegratorConfig,
    specs: &[EventSpec],
) -> Result<Trajectory, IntegratorError> {
    cfg.validate()?;
    if y0.len() != field.dim() {
        return Err(IntegratorError::Validation(format!(
            "initial state has dimension {}, field expects {}",
            y0.len(),
            field.dim()
        )));
    }
    if y0.iter().any(|v| !v.is_finite()) {
        return Err(IntegratorError::Validation("initial state is not finite".into()));
    }
    if let Some(g) = field.min_gap(y0) {
        if !(g > cfg.singular_guard) {
            return Err(IntegratorError::Validation(format!(
                "initial gap {g} is not above the collision guard {}",
                cfg.singular_guard
            )));
        }
    }
    let n = y0.len();
    let t_end = t0 + cfg.t_end;
    let mut st = Stages {
        k: std::array::from_fn(|_| vec![0.0; n]),
        tmp: vec![0.0; n],
    };
    field.eval(t0, y0, &mut st.k[0])?;
    let mut stats = Stats {
        evaluations: 1,
        ..Stats::default()
    };

    let mut trackers: Vec<Tracker> = specs.iter().map(|s| Tracker::new(s, t0, y0)).collect();
    let mut traj = Trajectory {
        times: vec![t0],
        states: vec![y0.to_vec()],
        segments: Vec::new(),
        events: Vec::new(),
        termination: Termination::Completed,
        stats: Stats::default(),
    };

    let mut t = t0;
    let mut y = y0.to_vec();
    let mut y_new = vec![0.0; n];
    let mut err = vec![0.0; n];
    let mut h = match cfg.fixed_step {
        Some(hf) => hf,
        None => initial_step(field, t0, y0, &st.k[0], cfg),
    };
    stats.evaluations += 1;
    let mut err_prev: f64 = 1e-4;
    let mut last_rejected = false;

    while t < t_end {
        let mut h_try = match cfg.fixed_step {
            Some(hf) => hf,
            None => {
                let mut cap = cfg.max_step;
                if let Some(c) = field.singular_step_cap(&y, cfg.step_cap_coefficient) {
                    cap = cap.min(c);
                }
                h.min(cap)
            }
        };
        if t + h_try >= t_end || t_end - (t + h_try) < 1e-12 * t_end.abs().max(1.0) {
            h_try = t_end - t;
        }
        if h_try < MIN_STEP {
            if t_end - t < MIN_STEP {
                break;
            }
            return Err(IntegratorError::StiffnessFailure { t, h: h_try, state: y });
        }

        let step = dopri_step(field, t, &y, h_try, &mut st, &mut y_new, &mut err);
        stats.evaluations += 6;
        if let Err(e) = step {
            match e {
                ModelError::Singularity { .. } => {
                    if cfg.fixed_step.is_some() {
                        return Err(e.into());
                    }
                    stats.rejected += 1;
                    h = 0.25 * h_try;
                    last_rejected = true;
                    continue;
                }
                other => return Err(other.into()),
            }
        }
        let norm = if cfg.fixed_step.is_some() {
            0.0
        } else {
            error_norm(&err, &y, &y_new, cfg)
        };
        if !norm.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
            stats.rejected += 1;
            h = 0.25 * h_try;
            last_rejected = true;
            continue;
        }
        if norm > 1.0 {
            stats.rejected += 1;
            h = h_try * (SAFETY * norm.powf(-0.2)).max(FAC_MIN);
            last_rejected = true;
            continue;
        }

        // accepted
        stats.accepted += 1;
        let seg = dense_segment(t, h_try, &y, &y_new, &st.k);
        let t_new = if h_try == t_end - t { t_end } else { t + h_try };

        let mut step_events = Vec::new();
        let mut stop = None;
        for (spec, tr) in specs.iter().zip(trackers.iter_mut()) {
            let evs = tr.scan(spec, &seg, &y_new);
            if spec.terminal && !evs.is_empty() {
                stop = Some(Termination::TerminalEvent);
            }
            step_events.extend(evs);
        }
        if let Some(gap) = field.min_gap(&y_new) {
            if gap <= cfg.singular_guard {
                let tc = events::locate(t, t_new, |s| {
                    let v = if s == t_new { y_new.clone() } else { seg.eval(s) };
                    field.min_gap(&v).is_some_and(|g| g <= cfg.singular_guard)
                });
                step_events.push(Event {
                    kind: EventKind::CollisionGuard,
                    time: tc,
                    vehicle: 0,
                    state: if tc == t_new { y_new.clone() } else { seg.eval(tc) },
                });
                stop = Some(Termination::CollisionGuard);
            }
        }
        step_events.sort_by(|a, b| a.time.total_cmp(&b.time));
        traj.events.extend(step_events);

        traj.times.push(t_new);
        traj.states.push(y_new.clone());
        traj.segments.push(seg);
        t = t_new;
        std::mem::swap(&mut y, &mut y_new);
        st.k.swap(0, 6);

        if let Some(reason) = stop {
            traj.termination = reason;
            break;
        }

        if cfg.fixed_step.is_none() {
            let e = norm.max(1e-10);
            let mut fac = SAFETY * e.powf(-PI_ALPHA) * err_prev.powf(PI_BETA);
            fac = fac.clamp(FAC_MIN, FAC_MAX);
            if last_rejected {
                fac = fac.min(1.0);
            }
            h = h_try * fac;
            err_prev = e;
        }
        last_rejected = false;
    }
    traj.stats = stats;
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CoordinateSystem, ModelParams, OvflField};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    pub(crate) struct Oscillator;

    impl VectorField for Oscillator {
        fn dim(&self) -> usize {
            2
        }
        fn eval(&self, _t: f64, s: &[f64], d: &mut [f64]) -> Result<(), ModelError> {
            d[0] = s[1];
            d[1] = -s[0];
            Ok(())
        }
    }

    #[test]
    fn oscillator_returns_after_full_period() {
        let cfg = IntegratorConfig::default().with_t_end(2.0 * PI).with_tolerances(1e-9, 1e-11);
        let tr = integrate(&Oscillator, 0.0, &[1.0, 0.0], &cfg, &[]).unwrap();
        let last = tr.last_state();
        assert_abs_diff_eq!(last[0], 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(last[1], 0.0, epsilon = 1e-6);
        assert_eq!(tr.t_final(), 2.0 * PI);
    }

    #[test]
    fn dense_output_matches_exact_solution() {
        let cfg = IntegratorConfig {
            max_step: 0.5,
            ..IntegratorConfig::default().with_t_end(10.0).with_tolerances(1e-10, 1e-12)
        };
        let tr = integrate(&Oscillator, 0.0, &[1.0, 0.0], &cfg, &[]).unwrap();
        for i in 0..1000 {
            let t = 10.0 * i as f64 / 1000.0;
            let s = tr.state_at(t).unwrap();
            assert_abs_diff_eq!(s[0], t.cos(), epsilon = 1e-7);
            assert_abs_diff_eq!(s[1], -t.sin(), epsilon = 1e-7);
        }
    }

    #[test]
    fn stored_samples_are_reproduced_exactly() {
        let cfg = IntegratorConfig::default().with_t_end(3.0);
        let tr = integrate(&Oscillator, 0.0, &[1.0, 0.0], &cfg, &[]).unwrap();
        let got = tr.resample(tr.times()).unwrap();
        assert_eq!(got, tr.states());
        for (seg, (t1, s1)) in tr.segments().iter().zip(tr.times()[1..].iter().zip(&tr.states()[1..])) {
            for (a, b) in seg.eval(*t1).iter().zip(s1) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        assert!(tr.resample(&[]).unwrap().is_empty());
        assert!(matches!(tr.state_at(3.5), Err(IntegratorError::OutOfRange { .. })));
        assert!(tr.state_at(-0.1).is_err());
    }

    #[test]
    fn adaptive_error_decreases_with_work_at_high_order() {
        // error ~ steps^-p for a p-th order method
        let mut pts = Vec::new();
        for tol in [1e-5, 1e-7, 1e-9, 1e-11] {
            let cfg = IntegratorConfig {
                max_step: 10.0,
                ..IntegratorConfig::default().with_t_end(2.0 * PI).with_tolerances(tol, tol)
            };
            let tr = integrate(&Oscillator, 0.0, &[1.0, 0.0], &cfg, &[]).unwrap();
            let s = tr.last_state();
            let e = ((s[0] - 1.0).powi(2) + s[1].powi(2)).sqrt();
            pts.push(((tr.stats.accepted as f64).ln(), e.ln()));
        }
        let slope = -(pts[3].1 - pts[0].1) / (pts[3].0 - pts[0].0);
        assert!(slope > 4.0, "observed order {slope}");
    }

    #[test]
    fn equilibrium_stays_put() {
        let p = ModelParams::new(2.0, 1.0, 0.8, 2).unwrap();
        let f = OvflField::new(p, CoordinateSystem::Relative).unwrap();
        let x_inf = p.x_infinity();
        let cfg = IntegratorConfig::default().with_t_end(100.0);
        let tr = integrate(&f, 0.0, &[x_inf, 0.0], &cfg, &[]).unwrap();
        for s in tr.states() {
            assert!((s[0] - x_inf).abs() < 1e-10 && s[1].abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_bad_input() {
        let cfg = IntegratorConfig {
            rtol: 0.0,
            ..IntegratorConfig::default()
        };
        assert!(matches!(
            integrate(&Oscillator, 0.0, &[1.0, 0.0], &cfg, &[]),
            Err(IntegratorError::Validation(_))
        ));
        let cfg = IntegratorConfig::default();
        assert!(integrate(&Oscillator, 0.0, &[1.0], &cfg, &[]).is_err());
        let p = ModelParams::new(2.0, 1.0, 0.8, 2).unwrap();
        let f = OvflField::new(p, CoordinateSystem::Relative).unwrap();
        assert!(integrate(&f, 0.0, &[0.0, 0.0], &cfg, &[]).is_err());
    }

    #[test]
    fn events_are_located_precisely() {
        // x = cos t crosses zero at pi/2 + k pi
        let spec = EventSpec::root(EventKind::YSignChange, 1, Crossing::Either, |_, s| s[0]);
        let cfg = IntegratorConfig::default().with_t_end(10.0);
        let tr = integrate(&Oscillator, 0.0, &[1.0, 0.0], &cfg, std::slice::from_ref(&spec)).unwrap();
        let times: Vec<f64> = tr.events.iter().map(|e| e.time).collect();
        assert_eq!(times.len(), 3);
        for (k, t) in times.iter().enumerate() {
            assert!((t - (PI / 2.0 + k as f64 * PI)).abs() < 1e-8, "{t}");
        }
        // idempotent on the stored dense output
        let again: Vec<f64> = tr.detect_events(&spec).iter().map(|e| e.time).collect();
        for (a, b) in times.iter().zip(&again) {
            assert!((a - b).abs() < 1e-10);
        }
        let rising = EventSpec::root(EventKind::YSignChange, 1, Crossing::Rising, |_, s| s[0]);
        let first_rise = tr.detect_event(&rising).unwrap();
        assert!((first_rise.time - 1.5 * PI).abs() < 1e-8);
    }

    #[test]
    fn no_event_on_constant_trajectory() {
        let p = ModelParams::new(2.0, 1.0, 0.8, 2).unwrap();
        let f = OvflField::new(p, CoordinateSystem::Relative).unwrap();
        let x_inf = p.x_infinity();
        let spec = EventSpec::root(EventKind::TInfinity, 1, Crossing::Either, move |_, s| s[0] - x_inf);
        let cfg = IntegratorConfig::default().with_t_end(50.0);
        let tr = integrate(&f, 0.0, &[x_inf, 0.0], &cfg, std::slice::from_ref(&spec)).unwrap();
        assert!(tr.events.is_empty());
        assert!(tr.detect_event(&spec).is_none());
    }

    #[test]
    fn terminal_event_stops_integration() {
        let spec = EventSpec::root(EventKind::YSignChange, 1, Crossing::Falling, |_, s| s[0]).terminal();
        let cfg = IntegratorConfig::default().with_t_end(10.0);
        let tr = integrate(&Oscillator, 0.0, &[1.0, 0.0], &cfg, &[spec]).unwrap();
        assert_eq!(tr.termination, Termination::TerminalEvent);
        assert!(tr.t_final() < 2.0);
    }

    #[test]
    fn hermite_rebuild_interpolates() {
        let cfg = IntegratorConfig::default().with_t_end(5.0);
        let tr = integrate(&Oscillator, 0.0, &[1.0, 0.0], &cfg, &[]).unwrap();
        let rebuilt = Trajectory::from_samples(&Oscillator, tr.times().to_vec(), tr.states().to_vec()).unwrap();
        for i in 0..500 {
            let t = 5.0 * i as f64 / 500.0;
            let s = rebuilt.state_at(t).unwrap();
            assert!((s[0] - t.cos()).abs() < 1e-6);
        }
        assert!(Trajectory::from_samples(&Oscillator, vec![0.0, 0.0], vec![vec![1.0, 0.0]; 2]).is_err());
    }

    struct Collider;

    impl VectorField for Collider {
        fn dim(&self) -> usize {
            1
        }
        fn eval(&self, _t: f64, s: &[f64], d: &mut [f64]) -> Result<(), ModelError> {
            if s[0] <= 0.0 {
                return Err(ModelError::Singularity { index: 1, gap: s[0] });
            }
            d[0] = -1.0;
            Ok(())
        }
        fn min_gap(&self, s: &[f64]) -> Option<f64> {
            Some(s[0])
        }
    }

    #[test]
    fn collision_guard_terminates_before_contact() {
        let cfg = IntegratorConfig {
            singular_guard: 1e-3,
            ..IntegratorConfig::default().with_t_end(5.0)
        };
        let tr = integrate(&Collider, 0.0, &[1.0], &cfg, &[]).unwrap();
        assert_eq!(tr.termination, Termination::CollisionGuard);
        let ev = tr.events_of(EventKind::CollisionGuard).next().unwrap();
        assert!((ev.time - 0.999).abs() < 1e-8, "{}", ev.time);
        assert!(tr.states().iter().all(|s| s[0] > 0.0 && s[0].is_finite()));
    }
}
