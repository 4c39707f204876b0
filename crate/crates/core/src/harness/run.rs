use std::path::Path;

use serde::{Deserialize, Serialize};

use super::scenario::{OutputKind, Scenario};
use super::table::SampleTable;
use super::{to_json_string, write_file, HarnessError, VERSION};
use crate::analysis::{
    convergence_diagnostics, extract_barrier_segment, leader_floor, project_first_pair, psi_slope_check,
    verify_barrier, verify_energy_and_bounds, verify_region_lemmas, verify_segment_lemmas, AnalysisError,
    BarrierSegment, ConvergenceReport, MonitorReport,
};
use crate::energy::{energy_budget, hamiltonian, EnergyBudget};
use crate::integrator::{integrate, Crossing, Event, EventKind, EventSpec, Stats, Termination, Trajectory};
use crate::model::{CoordinateSystem, OvflField};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub budget: EnergyBudget,
    pub convergence: Option<ConvergenceReport>,
    pub convergence_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairBarrier {
    pub pair: usize,
    pub segment: Option<BarrierSegment>,
    pub error: Option<String>,
}

/// Everything derived from a sample table.
#[derive(Debug, Clone)]
pub struct AnalysisOutput {
    pub monitors: Vec<MonitorReport>,
    pub energy: EnergyReport,
    pub barrier: Vec<PairBarrier>,
    /// Entry times into each near-collision segment.
    pub t_check: Vec<Event>,
    pub min_gap: f64,
}

impl AnalysisOutput {
    pub fn failed(&self) -> usize {
        self.monitors.iter().filter(|m| !m.passed).count()
    }
}

fn analysis_err(e: AnalysisError) -> HarnessError {
    HarnessError::Validation(e.to_string())
}

/// Run every analysis on a sample table. The trajectory is rebuilt from the
/// relative columns with cubic Hermite interpolation, so the result depends
/// only on the table contents.
pub fn analyze_table(scn: &Scenario, table: &SampleTable) -> Result<AnalysisOutput, HarnessError> {
    let p = scn.params;
    let n = p.followers();
    if table.followers != n {
        return Err(HarnessError::Schema(format!("table has {} followers, scenario {n}", table.followers)));
    }
    let field = OvflField::new(p, CoordinateSystem::Relative).map_err(HarnessError::validation)?;
    let traj = Trajectory::from_samples(&field, table.times(), table.relative_states()).map_err(HarnessError::validation)?;
    let (pair_traj, pair_field) = project_first_pair(&traj, &field).map_err(analysis_err)?;

    let mut monitors = verify_region_lemmas(&pair_traj, &pair_field).map_err(analysis_err)?;

    let (x0, y0) = field.first_pair(&traj.states()[0]);
    let mut budget = energy_budget(&p, x0, y0).map_err(HarnessError::validation)?;
    let min_x1 = traj.states().iter().map(|s| s[0]).fold(f64::INFINITY, f64::min);
    budget = budget.with_empirical_delta_1(&p, min_x1);
    monitors.extend(verify_energy_and_bounds(&traj, &field, &budget).map_err(analysis_err)?);

    let min_gap = traj
        .states()
        .iter()
        .flat_map(|s| (1..=n).map(|i| field.gap(s, i)))
        .fold(f64::INFINITY, f64::min);
    let guard = scn.integrator.singular_guard;
    let mut no_collision = MonitorReport::new("no_collision", (guard - min_gap).max(0.0), 0.0)
        .observed(min_gap)
        .detail(format!("smallest gap over all pairs {min_gap} against the collision guard {guard}"));
    no_collision.passed = min_gap > guard;
    monitors.push(no_collision);

    let (convergence, convergence_error) = match convergence_diagnostics(&pair_traj, &pair_field, &budget, scn.epsilon) {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    };

    let mut barrier = Vec::new();
    let mut t_check = Vec::new();
    for pair in 2..=n {
        let floor = leader_floor(&traj, &field, pair, Some(&budget));
        match extract_barrier_segment(&traj, &field, pair, floor) {
            Ok(Some(seg)) => {
                monitors.push(verify_barrier(&seg, p.beta).map_err(analysis_err)?);
                match psi_slope_check(&seg, &p) {
                    Ok(m) => monitors.push(m),
                    Err(e) => monitors.push(failed_monitor(&format!("psi_slope_pair{pair}"), &e)),
                }
                monitors.extend(verify_segment_lemmas(&traj, &field, &seg).map_err(analysis_err)?);
                t_check.push(Event {
                    kind: EventKind::TCheck,
                    time: seg.t_check,
                    vehicle: pair,
                    state: traj.state_at(seg.t_check).map_err(HarnessError::validation)?,
                });
                barrier.push(PairBarrier { pair, segment: Some(seg), error: None });
            }
            Ok(None) => {
                monitors.push(MonitorReport::vacuous(
                    &format!("barrier_pair{pair}"),
                    &format!("gap {pair} never fell to half of delta_2"),
                ));
                barrier.push(PairBarrier { pair, segment: None, error: None });
            }
            Err(e) => {
                monitors.push(failed_monitor(&format!("barrier_pair{pair}"), &e));
                barrier.push(PairBarrier { pair, segment: None, error: Some(e.to_string()) });
            }
        }
    }

    Ok(AnalysisOutput {
        monitors,
        energy: EnergyReport { budget, convergence, convergence_error },
        barrier,
        t_check,
        min_gap,
    })
}

fn failed_monitor(name: &str, e: &dyn std::fmt::Display) -> MonitorReport {
    MonitorReport {
        name: name.into(),
        passed: false,
        worst_violation: f64::INFINITY,
        tolerance: 0.0,
        time: None,
        state: None,
        observed: None,
        detail: e.to_string(),
    }
}

/// Paths are relative to the output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunArtifact {
    pub version: String,
    pub scenario: Scenario,
    pub trajectory_csv: Option<String>,
    pub events_json: Option<String>,
    pub monitors_json: Option<String>,
    pub energy_json: Option<String>,
    pub barrier_json: Option<String>,
    pub termination: Termination,
    pub stats: Stats,
    pub samples: usize,
    pub monitors_failed: usize,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub artifact: RunArtifact,
    pub analysis: AnalysisOutput,
    pub table: SampleTable,
}

fn first_pair_events(field: &OvflField, epsilon: f64, energy_slack: f64) -> Vec<EventSpec> {
    let f = *field;
    let x_inf = f.x_infinity();
    vec![
        EventSpec::root(EventKind::TInfinity, 1, Crossing::Either, move |_, s| f.first_pair(s).0 - x_inf),
        EventSpec::root(EventKind::TInfinityEps, 1, Crossing::Falling, move |_, s| {
            (f.first_pair(s).0 - x_inf).abs() - epsilon / 3.0
        })
        .once(),
        EventSpec::root(EventKind::YSignChange, 1, Crossing::Either, move |_, s| f.first_pair(s).1),
        EventSpec::increase(EventKind::EnergyViolation, 1, energy_slack, move |_, s| {
            let (x, y) = f.first_pair(s);
            hamiltonian(&f.params, x, y).unwrap_or(f64::NAN)
        }),
    ]
}

/// Integrate a scenario, analyze the exported table and, when `out_dir` is
/// given, write the requested artifacts there.
pub fn simulate(scn: &Scenario, out_dir: Option<&Path>) -> Result<RunReport, HarnessError> {
    let scn = scn.resolved();
    let (field, y0) = scn.validate()?;
    let (x1, v1) = field.first_pair(&y0);
    let h0 = energy_budget(&scn.params, x1, v1).map_err(HarnessError::validation)?.h_circ;
    let specs = first_pair_events(&field, scn.epsilon, crate::analysis::ENERGY_SLACK * (1.0 + h0));
    let traj = integrate(&field, 0.0, &y0, &scn.integrator, &specs).map_err(|e| HarnessError::Integration(e.to_string()))?;

    let table = SampleTable::from_trajectory(&traj, &field)?;
    let csv = table.to_csv();
    // analyze what was exported, so offline analysis reproduces it exactly
    let exported = SampleTable::from_csv(&csv, table.followers)?;
    let analysis = analyze_table(&scn, &exported)?;

    let mut events = traj.events.clone();
    events.extend(analysis.t_check.iter().cloned());
    events.sort_by(|a, b| a.time.total_cmp(&b.time));

    let name = |kind: OutputKind, file: &str| scn.wants(kind).then(|| file.to_string());
    let artifact = RunArtifact {
        version: VERSION.into(),
        scenario: scn.clone(),
        trajectory_csv: name(OutputKind::Timeseries, "trajectory.csv"),
        events_json: name(OutputKind::Events, "events.json"),
        monitors_json: name(OutputKind::Monitors, "monitors.json"),
        energy_json: name(OutputKind::Energy, "energy.json"),
        barrier_json: name(OutputKind::Barrier, "barrier.json"),
        termination: traj.termination,
        stats: traj.stats.clone(),
        samples: traj.times().len(),
        monitors_failed: analysis.failed(),
    };

    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
        let files: [(&Option<String>, String); 5] = [
            (&artifact.trajectory_csv, csv),
            (&artifact.events_json, to_json_string(&events)),
            (&artifact.monitors_json, to_json_string(&analysis.monitors)),
            (&artifact.energy_json, to_json_string(&analysis.energy)),
            (&artifact.barrier_json, to_json_string(&analysis.barrier)),
        ];
        for (file, contents) in files {
            if let Some(f) = file {
                write_file(&dir.join(f), &contents)?;
            }
        }
        write_file(&dir.join("scenario.json"), &(scn.to_json() + "\n"))?;
        write_file(&dir.join("run.json"), &to_json_string(&artifact))?;
    }
    Ok(RunReport { artifact, analysis, table })
}

/// Offline analysis of an exported CSV; returns the monitor report JSON.
pub fn analyze(csv_text: &str, scn: &Scenario) -> Result<String, HarnessError> {
    let scn = scn.resolved();
    scn.validate()?;
    let table = SampleTable::from_csv(csv_text, scn.params.followers())?;
    let out = analyze_table(&scn, &table)?;
    Ok(to_json_string(&out.monitors))
}
