mod common;

use approx::assert_abs_diff_eq;
use proptest::prelude::*;

use ovfl::energy::{dH_dt, hamiltonian};
use ovfl::harness::{SampleTable, Scenario};
use ovfl::integrator::{integrate, Crossing, EventKind, EventSpec, IntegratorConfig};
use ovfl::model::{
    equilibrium, ov_value, to_absolute, to_difference, to_relative, vf_absolute, vf_difference, vf_relative,
    CoordinateSystem, ModelParams, OvflField, PlatoonState, RelativeState, V_MAX,
};

fn params(followers: usize) -> impl Strategy<Value = ModelParams> {
    (1.0..5.0f64, 0.5..5.0f64, 0.5..1.5f64)
        .prop_map(move |(a, b, v)| ModelParams::new(a, b, v, followers + 1).unwrap())
}

/// Absolute platoon with the leader at `vbar` and every speed within the limits.
fn platoon() -> impl Strategy<Value = (ModelParams, PlatoonState)> {
    (1usize..=4).prop_flat_map(|n| {
        (
            params(n),
            -10.0..10.0f64,
            prop::collection::vec(0.05..3.0f64, n),
            prop::collection::vec(0.0..V_MAX, n),
        )
            .prop_map(|(p, x0, gaps, speeds)| {
                let mut x = vec![x0];
                for g in gaps {
                    x.push(x.last().unwrap() - g);
                }
                let mut y = vec![p.vbar];
                y.extend(speeds);
                (p, PlatoonState { t: 0.0, x, y })
            })
    })
}

proptest! {
    #[test]
    fn coordinate_round_trips((p, abs) in platoon()) {
        let rel = to_relative(&abs, p.vbar).unwrap();
        let back = to_absolute(&rel, abs.x[0], p.vbar).unwrap();
        for (a, b) in abs.x.iter().zip(&back.x).chain(abs.y.iter().zip(&back.y)) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }
        let dif = to_difference(&rel).unwrap();
        prop_assert!(dif.xi.iter().all(|&g| g > 0.0));
        let rel2 = dif.to_relative();
        for (a, b) in rel.x.iter().zip(&rel2.x).chain(rel.y.iter().zip(&rel2.y)) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn vector_fields_agree((p, abs) in platoon()) {
        let rel = to_relative(&abs, p.vbar).unwrap();
        let da = vf_absolute(&p, &abs).unwrap();
        let dr = vf_relative(&p, &rel).unwrap();
        let dd = vf_difference(&p, &to_difference(&rel).unwrap()).unwrap();
        let scale = 1.0 + da.velocity.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let (mut px, mut pv) = (0.0, 0.0);
        for n in 1..abs.x.len() {
            let (xr, yr) = (da.position[0] - da.position[n], -da.velocity[n]);
            prop_assert!((dr.position[n - 1] - xr).abs() <= 1e-12 * scale);
            prop_assert!((dr.velocity[n - 1] - yr).abs() <= 1e-12 * scale);
            prop_assert!((dd.position[n - 1] - (xr - px)).abs() <= 1e-12 * scale);
            prop_assert!((dd.velocity[n - 1] - (yr - pv)).abs() <= 1e-12 * scale);
            (px, pv) = (xr, yr);
        }
    }

    #[test]
    fn table_csv_round_trip_is_exact(
        rows in prop::collection::vec(prop::collection::vec(-1e3..1e3f64, 8), 1..20)
    ) {
        // two followers: t, X1, X2, Y1, Y2, xi1, xi2, zeta1, zeta2, H1
        let rows: Vec<Vec<f64>> = rows
            .into_iter()
            .enumerate()
            .map(|(i, mut r)| {
                r.insert(0, i as f64 * 0.1);
                r.push(r[1] * r[3]);
                r
            })
            .collect();
        let table = SampleTable { followers: 2, rows };
        let back = SampleTable::from_csv(&table.to_csv(), 2).unwrap();
        prop_assert_eq!(back.rows, table.rows);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn speeds_stay_within_limits(
        p in params(2),
        gaps in prop::collection::vec(0.1..4.0f64, 2),
        frac in prop::collection::vec(0.0..1.0f64, 2),
    ) {
        let (lo, hi) = p.relative_speed_bounds();
        let y: Vec<f64> = frac.iter().map(|f| hi - f * (hi - lo) * 0.999).collect();
        let x = [gaps[0], gaps[0] + gaps[1]];
        let field = OvflField::new(p, CoordinateSystem::Relative).unwrap();
        let cfg = IntegratorConfig::default().with_t_end(20.0);
        let traj = integrate(&field, 0.0, &[x[0], x[1], y[0], y[1]], &cfg, &[]).unwrap();
        for s in traj.states() {
            for &yn in &s[2..] {
                prop_assert!(yn > lo - 1e-8 && yn <= hi + 1e-8, "Y = {yn} outside ({lo}, {hi}]");
            }
        }
    }

    #[test]
    fn energy_rate_matches_finite_differences(
        p in params(1),
        x0 in 0.3..3.0f64,
        y0 in -0.5..0.5f64,
    ) {
        let field = OvflField::new(p, CoordinateSystem::Relative).unwrap();
        let cfg = IntegratorConfig::default().with_t_end(10.0);
        let traj = integrate(&field, 0.0, &[x0, y0], &cfg, &[]).unwrap();
        let h = 1e-5;
        for k in 1..20 {
            let t = 0.5 * k as f64;
            let (a, b) = (traj.state_at(t - h).unwrap(), traj.state_at(t + h).unwrap());
            let fd = (hamiltonian(&p, b[0], b[1]).unwrap() - hamiltonian(&p, a[0], a[1]).unwrap()) / (2.0 * h);
            let s = traj.state_at(t).unwrap();
            let exact = dH_dt(&p, s[0], s[1]).unwrap();
            prop_assert!((fd - exact).abs() < 1e-6 * (1.0 + exact.abs()), "t = {t}: {fd} vs {exact}");
        }
    }
}

#[test]
fn optimal_velocity_is_increasing_and_bounded() {
    let grid: Vec<f64> = (0..10_000).map(|i| 10.0 * i as f64 / 9_999.0).collect();
    assert!(grid.windows(2).all(|w| ov_value(w[1]) > ov_value(w[0])));
    assert!(grid.iter().all(|&x| (0.0..1.9641).contains(&ov_value(x))));
    assert_eq!(ov_value(0.0), 0.0);
    assert_abs_diff_eq!(ov_value(2.0), 0.964_027_580_075_816_9, epsilon = 1e-15);
    assert_abs_diff_eq!(ov_value(3.3), common::ov(3.3), epsilon = 1e-15);
}

#[test]
fn equilibrium_is_fixed_in_every_system() {
    let p = ModelParams::new(2.5, 1.5, 1.1, 4).unwrap();
    let eq = equilibrium(&p).unwrap();
    assert_abs_diff_eq!(eq.x_infinity, common::x_inf(1.1), epsilon = 1e-12);
    let rel: &RelativeState = &eq.states;
    let abs = to_absolute(rel, 0.0, p.vbar).unwrap();
    let rates = [
        vf_relative(&p, rel).unwrap(),
        vf_difference(&p, &to_difference(rel).unwrap()).unwrap(),
    ];
    for r in &rates {
        assert!(r.position.iter().chain(&r.velocity).all(|v| v.abs() < 1e-14), "{r:?}");
    }
    let ra = vf_absolute(&p, &abs).unwrap();
    assert!(ra.velocity.iter().all(|v| v.abs() < 1e-14));
    assert!(ra.position.iter().all(|&v| (v - p.vbar).abs() < 1e-15));
}

#[test]
fn events_relocate_on_stored_trajectories() {
    let scn = Scenario::preset("fig6-oscillate").unwrap();
    let (field, y0) = scn.validate().unwrap();
    let x_inf = field.x_infinity();
    let spec = || EventSpec::root(EventKind::YSignChange, 1, Crossing::Either, |_, s: &[f64]| s[1]);
    let spec_x = move || EventSpec::root(EventKind::TInfinity, 1, Crossing::Either, move |_, s: &[f64]| s[0] - x_inf);
    let traj = integrate(&field, 0.0, &y0, &scn.integrator, &[spec(), spec_x()]).unwrap();
    assert!(traj.events.len() > 10);
    let again: Vec<_> = [spec(), spec_x()].iter().flat_map(|s| traj.detect_events(s)).collect();
    assert_eq!(again.len(), traj.events.len());
    for e in &traj.events {
        assert!(again.iter().any(|a| a.kind == e.kind && (a.time - e.time).abs() < 1e-10), "{e:?}");
    }
}

#[test]
fn tighter_tolerances_agree_with_the_coarse_run() {
    let scn = Scenario::preset("fig5").unwrap();
    let (field, y0) = scn.validate().unwrap();
    let coarse = scn.integrator.with_tolerances(1e-8, 1e-10);
    let fine = scn.integrator.with_tolerances(1e-10, 1e-12);
    let a = integrate(&field, 0.0, &y0, &coarse, &[]).unwrap();
    let b = integrate(&field, 0.0, &y0, &fine, &[]).unwrap();
    for t in [1.0, 5.0, 20.0] {
        let (sa, sb) = (a.state_at(t).unwrap(), b.state_at(t).unwrap());
        for (u, v) in sa.iter().zip(&sb) {
            assert!((u - v).abs() < 100.0 * (1e-8 * u.abs() + 1e-10), "t = {t}: {u} vs {v}");
        }
    }
}
