use serde::{Deserialize, Serialize};

use super::{dense_points, require_single_pair, AnalysisError, MonitorReport};
use crate::integrator::{Crossing, EventKind, EventSpec, Trajectory};
use crate::model::{OvflField, VectorField};

/// Tolerance on the sign of `Y_1` in the quadrant checks.
pub const LEMMA_TOL: f64 = 1e-8;

const INTERIOR_POINTS: usize = 3;

/// Position of `(x, y)` relative to the rest point `(X_inf, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RegionLabel {
    /// `x < X_inf`, `y > 0`
    U1,
    /// `x < X_inf`, `y < 0`
    L1,
    /// `x > X_inf`, `y > 0`
    U2,
    /// `x > X_inf`, `y < 0`
    L2,
    /// `y = 0`, `x != X_inf`
    AxisX,
    /// `x = X_inf`, `y != 0`
    AxisY,
    Equilibrium,
}

pub fn classify_region(x: f64, y: f64, x_infinity: f64) -> RegionLabel {
    use std::cmp::Ordering::*;
    match (x.total_cmp(&x_infinity), y.total_cmp(&0.0)) {
        (Equal, _) if y == 0.0 => RegionLabel::Equilibrium,
        (Equal, _) => RegionLabel::AxisY,
        (_, Equal) => RegionLabel::AxisX,
        _ if y == 0.0 => RegionLabel::AxisX,
        (Less, Greater) => RegionLabel::U1,
        (Less, Less) => RegionLabel::L1,
        (Greater, Greater) => RegionLabel::U2,
        (Greater, Less) => RegionLabel::L2,
    }
}

const NAMES: [&str; 4] = [
    "lemma1_u1_invariance",
    "lemma2_l1_turnaround",
    "lemma3_u2_turnaround",
    "lemma4_l2_invariance",
];

/// Check the quadrant statements for a leader/follower trajectory on `[0, T_inf)`.
pub fn verify_region_lemmas(traj: &Trajectory, field: &OvflField) -> Result<Vec<MonitorReport>, AnalysisError> {
    require_single_pair(traj, field)?;
    let x_inf = field.x_infinity();
    let s0 = &traj.states()[0];
    let label = classify_region(s0[0], s0[1], x_inf);

    let t_inf_spec = EventSpec::root(EventKind::TInfinity, 1, Crossing::Either, move |_, s| s[0] - x_inf);
    let t_inf = traj.detect_event(&t_inf_spec).map(|e| e.time);
    let t_stop = t_inf.unwrap_or(f64::INFINITY);
    let coverage = match t_inf {
        Some(t) => format!("T_inf = {t}"),
        None => format!("T_inf not reached by t = {}; checked on the full trajectory", traj.t_final()),
    };
    let points = dense_points(traj, t_stop, INTERIOR_POINTS);

    let applicable = match label {
        RegionLabel::U1 => 0,
        RegionLabel::L1 => 1,
        RegionLabel::U2 => 2,
        RegionLabel::L2 => 3,
        _ => {
            return Ok(NAMES
                .iter()
                .map(|n| MonitorReport::vacuous(n, &format!("start region {label:?}: not applicable")))
                .collect())
        }
    };

    let mut reports: Vec<MonitorReport> = NAMES
        .iter()
        .map(|n| MonitorReport::vacuous(n, &format!("start region {label:?}: not applicable")))
        .collect();

    let report = match applicable {
        0 => invariance(NAMES[0], &points, true),
        3 => invariance(NAMES[3], &points, false),
        _ => turnaround(NAMES[applicable], traj, field, &points, t_stop, applicable == 1)?,
    };
    let detail = format!("start region {label:?}; {coverage}; {}", report.detail);
    reports[applicable] = report.detail(detail);
    Ok(reports)
}

/// `Y_1` keeps its sign (positive when `positive`) on the checked window.
fn invariance(name: &str, points: &[(f64, Vec<f64>)], positive: bool) -> MonitorReport {
    let sign = if positive { 1.0 } else { -1.0 };
    let mut worst = 0.0;
    let mut at = &points[0];
    for p in points {
        let v = -sign * p.1[1];
        if v > worst {
            worst = v;
            at = p;
        }
    }
    MonitorReport::new(name, worst, LEMMA_TOL).at(at.0, &at.1).detail(format!(
        "Y_1 {} on {} checked points",
        if positive { "> 0" } else { "< 0" },
        points.len()
    ))
}

/// `Y_1` reaches zero before `T_inf`, with `dY_1/dt > 0` (from below) or
/// `< 0` (from above), and keeps the new sign up to `T_inf`.
fn turnaround(
    name: &str,
    traj: &Trajectory,
    field: &OvflField,
    points: &[(f64, Vec<f64>)],
    t_stop: f64,
    from_below: bool,
) -> Result<MonitorReport, AnalysisError> {
    let dir = if from_below { Crossing::Rising } else { Crossing::Falling };
    let spec = EventSpec::root(EventKind::YSignChange, 1, dir, |_, s| s[1]);
    let sign = if from_below { 1.0 } else { -1.0 };
    let zero = traj.detect_event(&spec).filter(|e| e.time < t_stop);
    let Some(ev) = zero else {
        // closest approach of Y_1 to zero on the window
        let best = points.iter().map(|p| -sign * p.1[1]).fold(f64::INFINITY, f64::min);
        return Ok(MonitorReport::new(name, best.max(f64::MIN_POSITIVE).max(LEMMA_TOL * 2.0), LEMMA_TOL)
            .observed(best)
            .detail("no zero of Y_1 before T_inf"));
    };
    let mut d = [0.0; 2];
    field.eval(ev.time, &ev.state, &mut d)?;
    let accel = d[1];
    let mut worst = if sign * accel > 0.0 { 0.0 } else { sign * -accel + LEMMA_TOL * 2.0 };
    let mut at = (ev.time, ev.state.clone());
    for p in points.iter().filter(|p| p.0 > ev.time) {
        let v = -sign * p.1[1];
        if v > worst {
            worst = v;
            at = p.clone();
        }
    }
    Ok(MonitorReport::new(name, worst, LEMMA_TOL)
        .at(at.0, &at.1)
        .observed(ev.time)
        .detail(format!("Y_1 = 0 at t = {} with dY_1/dt = {accel}", ev.time)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::{integrate, IntegratorConfig};
    use crate::model::{CoordinateSystem, ModelParams};

    #[test]
    fn classification() {
        assert_eq!(classify_region(0.5, 1.0, 2.3497), RegionLabel::U1);
        assert_eq!(classify_region(0.5, -0.7, 1.8345), RegionLabel::L1);
        assert_eq!(classify_region(3.0, 0.2, 1.8345), RegionLabel::U2);
        assert_eq!(classify_region(3.0, -0.2, 1.8345), RegionLabel::L2);
        assert_eq!(classify_region(1.8345, 0.0, 1.8345), RegionLabel::Equilibrium);
        assert_eq!(classify_region(1.8345, 0.3, 1.8345), RegionLabel::AxisY);
        assert_eq!(classify_region(1.0, 0.0, 1.8345), RegionLabel::AxisX);
        assert_eq!(classify_region(1.0, -0.0, 1.8345), RegionLabel::AxisX);
    }

    fn run(alpha: f64, beta: f64, vbar: f64, x0: f64, y0: f64) -> (Trajectory, OvflField) {
        let p = ModelParams::new(alpha, beta, vbar, 2).unwrap();
        let f = OvflField::new(p, CoordinateSystem::Relative).unwrap();
        let cfg = IntegratorConfig::default().with_t_end(60.0);
        (integrate(&f, 0.0, &[x0, y0], &cfg, &[]).unwrap(), f)
    }

    #[test]
    fn fast_converging_u1_start() {
        let (tr, f) = run(3.0, 2.0, 1.3, 0.5, 1.0);
        let reps = verify_region_lemmas(&tr, &f).unwrap();
        assert!(reps.iter().all(|r| r.passed), "{reps:#?}");
        assert!(reps[0].detail.contains("U1"));
    }

    #[test]
    fn fig5_l1_start_turns_around() {
        let (tr, f) = run(2.0, 1.0, 0.8, 0.5, -0.7);
        let reps = verify_region_lemmas(&tr, &f).unwrap();
        assert!(reps.iter().all(|r| r.passed), "{reps:#?}");
        assert!(reps[1].observed.unwrap() > 0.0);
    }

    #[test]
    fn equilibrium_start_is_vacuous() {
        let p = ModelParams::new(2.0, 1.0, 0.8, 2).unwrap();
        let (tr, f) = run(2.0, 1.0, 0.8, p.x_infinity(), 0.0);
        let reps = verify_region_lemmas(&tr, &f).unwrap();
        assert_eq!(reps.len(), 4);
        assert!(reps.iter().all(|r| r.passed && r.worst_violation == 0.0));
    }

    #[test]
    fn rejects_multi_vehicle_trajectories() {
        let p = ModelParams::new(2.0, 1.0, 0.8, 3).unwrap();
        let f = OvflField::new(p, CoordinateSystem::Relative).unwrap();
        let cfg = IntegratorConfig::default().with_t_end(1.0);
        let tr = integrate(&f, 0.0, &[1.0, 2.0, 0.0, 0.0], &cfg, &[]).unwrap();
        assert!(matches!(verify_region_lemmas(&tr, &f), Err(AnalysisError::Validation(_))));
    }

    #[test]
    fn synthetic_violation_is_reported() {
        // a U1 start whose Y_1 dips below zero before reaching X_inf
        let p = ModelParams::new(2.0, 1.0, 0.8, 2).unwrap();
        let f = OvflField::new(p, CoordinateSystem::Relative).unwrap();
        let times = vec![0.0, 1.0, 2.0];
        let states = vec![vec![0.5, 0.3], vec![0.6, -0.2], vec![0.55, 0.1]];
        let tr = Trajectory::from_samples(&f, times, states).unwrap();
        let reps = verify_region_lemmas(&tr, &f).unwrap();
        assert!(!reps[0].passed);
        assert!(reps[0].worst_violation >= 0.2 - 1e-12);
    }
}
