use super::{AnalysisError, MonitorReport};
use crate::energy::{hamiltonian, Delta1Source, EnergyBudget};
use crate::integrator::Trajectory;
use crate::model::OvflField;

/// Relative slack on the energy monotonicity check, scaled by `1 + h0`.
pub const ENERGY_SLACK: f64 = 1e-7;
/// Absolute slack on the speed and gap bounds.
pub const BOUND_TOL: f64 = 1e-6;

/// Energy decay and the a-priori bounds of the leading pair, checked at the
/// stored samples of `traj` (any platoon size; only `(X_1, Y_1)` is used).
///
/// Returns, in order: energy monotonicity, `|Y_1| <= y_bar`, `X_1 <= x_bar`,
/// `X_1 > 0` (whose observed value is the empirical `delta_1`), and, when the
/// budget carries an energy-based `delta_1`, the floor `X_1 >= delta_1`.
pub fn verify_energy_and_bounds(
    traj: &Trajectory,
    field: &OvflField,
    budget: &EnergyBudget,
) -> Result<Vec<MonitorReport>, AnalysisError> {
    let p = &field.params;
    let pairs: Vec<(f64, f64)> = traj.states().iter().map(|s| field.first_pair(s)).collect();
    let times = traj.times();

    let (k_min_gap, min_gap) = pairs
        .iter()
        .enumerate()
        .map(|(k, &(x, _))| (k, x))
        .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    let mut gap_positive = MonitorReport::new("gap_positive", (-min_gap).max(0.0), 0.0)
        .at(times[k_min_gap], &traj.states()[k_min_gap])
        .observed(min_gap)
        .detail(format!("smallest X_1 = {min_gap}"));
    if !(min_gap > 0.0) {
        gap_positive.passed = false;
        gap_positive.worst_violation = gap_positive.worst_violation.max(f64::MIN_POSITIVE);
        // energy is undefined past a collision
        return Ok(vec![gap_positive]);
    }

    let slack = ENERGY_SLACK * (1.0 + budget.h_circ);
    let mut running_min = f64::INFINITY;
    let mut t_min = times[0];
    let mut energy = (0.0, 0, t_min);
    for (k, &(x, y)) in pairs.iter().enumerate() {
        let h = hamiltonian(p, x, y)?;
        if h - running_min > energy.0 {
            energy = (h - running_min, k, t_min);
        }
        if h < running_min {
            running_min = h;
            t_min = times[k];
        }
    }
    let energy_report = MonitorReport::new("energy_nonincreasing", energy.0, slack)
        .at(times[energy.1], &traj.states()[energy.1])
        .observed(running_min)
        .detail(if energy.0 > 0.0 {
            format!("H rises by {:e} on [{}, {}]", energy.0, energy.2, times[energy.1])
        } else {
            "H never exceeds its running minimum".into()
        });

    let worst_by = |f: &dyn Fn(f64, f64) -> f64| {
        pairs
            .iter()
            .enumerate()
            .map(|(k, &(x, y))| (k, f(x, y)))
            .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a })
    };
    let (ky, ey) = worst_by(&|_, y| y.abs() - budget.y_bar);
    let speed = MonitorReport::new("speed_bound", ey.max(0.0), BOUND_TOL)
        .at(times[ky], &traj.states()[ky])
        .observed(ey + budget.y_bar)
        .detail(format!("max |Y_1| = {} against y_bar = {}", ey + budget.y_bar, budget.y_bar));
    let (kx, ex) = worst_by(&|x, _| x - budget.x_bar);
    let gap_upper = MonitorReport::new("gap_upper_bound", ex.max(0.0), BOUND_TOL)
        .at(times[kx], &traj.states()[kx])
        .observed(ex + budget.x_bar)
        .detail(format!("max X_1 = {} against x_bar = {}", ex + budget.x_bar, budget.x_bar));

    let mut out = vec![energy_report, speed, gap_upper, gap_positive];
    if let (Delta1Source::Energy, Some(d1)) = (budget.delta_1_source, budget.delta_1) {
        out.push(
            MonitorReport::new("gap_lower_bound", (d1 - min_gap).max(0.0), BOUND_TOL)
                .at(times[k_min_gap], &traj.states()[k_min_gap])
                .observed(min_gap)
                .detail(format!("min X_1 = {min_gap} against delta_1 = {d1}")),
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::energy_budget;
    use crate::integrator::{integrate, IntegratorConfig};
    use crate::model::{CoordinateSystem, ModelParams};

    fn field() -> OvflField {
        OvflField::new(ModelParams::new(2.0, 1.0, 0.8, 2).unwrap(), CoordinateSystem::Relative).unwrap()
    }

    #[test]
    fn fig5_bounds_hold() {
        let f = field();
        let cfg = IntegratorConfig::default().with_t_end(40.0);
        let tr = integrate(&f, 0.0, &[0.5, -0.7], &cfg, &[]).unwrap();
        let b = energy_budget(&f.params, 0.5, -0.7).unwrap();
        let reps = verify_energy_and_bounds(&tr, &f, &b).unwrap();
        assert_eq!(reps.len(), 5);
        assert!(reps.iter().all(|r| r.passed), "{reps:#?}");
        let empirical = reps[3].observed.unwrap();
        assert!(empirical >= b.delta_1.unwrap() - BOUND_TOL && empirical < 0.5);
    }

    #[test]
    fn synthetic_energy_increase_fails() {
        let f = field();
        let x_inf = f.x_infinity();
        let times = vec![0.0, 1.0, 2.0, 3.0];
        let states = vec![vec![x_inf, 0.1], vec![x_inf, 0.05], vec![x_inf, 0.3], vec![x_inf, 0.0]];
        let tr = Trajectory::from_samples(&f, times, states).unwrap();
        let b = energy_budget(&f.params, x_inf, 0.3).unwrap();
        let reps = verify_energy_and_bounds(&tr, &f, &b).unwrap();
        let e = &reps[0];
        assert!(!e.passed);
        assert!((e.worst_violation - (0.045 - 0.00125)).abs() < 1e-12);
        assert_eq!(e.time, Some(2.0));
        assert!(e.detail.contains("[1, 2]"));
    }
}
