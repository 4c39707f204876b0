//! Numerical checks of the qualitative behaviour of OVFL trajectories:
//! quadrant invariance of the leading pair, energy bounds, convergence
//! rates and the near-collision barrier of the following pairs.

mod barrier;
mod convergence;
mod monitors;
mod regions;
mod sweep;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::energy::EnergyError;
use crate::integrator::{IntegratorError, Trajectory};
use crate::model::{CoordinateSystem, ModelError, OvflField};

pub use barrier::{
    barrier_lower_bound, barrier_r, extract_barrier_segment, extract_barrier_segment_with_budget,
    g_field, leader_floor, psi_slope_check, verify_barrier, verify_segment_lemmas, BarrierSample, BarrierSegment,
    LeaderFloor, MonotoneCubic, SegmentExit, BARRIER_TOL, PSI_SLOPE_REL_TOL,
};
pub use convergence::{convergence_diagnostics, ConvergenceReport};
pub use monitors::{verify_energy_and_bounds, BOUND_TOL, ENERGY_SLACK};
pub use regions::{classify_region, verify_region_lemmas, RegionLabel, LEMMA_TOL};
pub use sweep::{
    equilibrium_sampler, no_collision_sweep, random_admissible_sampler, CollisionSweepReport,
    InitialSampler, ParamRanges, SweepCase, SweepOutcome,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("invalid analysis input: {0}")]
    Validation(String),
    #[error("not enough samples to fit: {found} after the window start, need {needed}")]
    InsufficientData { found: usize, needed: usize },
    #[error("gap rate decreases by {drop:e} at t = {t} on the near-collision segment")]
    MonotonicityViolation { t: f64, drop: f64 },
    #[error("singular quotient: gap acceleration vanishes at zeta = {zeta}, psi = {psi}")]
    SingularQuotient { zeta: f64, psi: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Integrator(#[from] IntegratorError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorReport {
    pub name: String,
    pub passed: bool,
    pub worst_violation: f64,
    pub tolerance: f64,
    /// Time of the worst violation (or of the deciding event).
    pub time: Option<f64>,
    pub state: Option<Vec<f64>>,
    /// Monitor-specific observed quantity (e.g. the smallest gap seen).
    pub observed: Option<f64>,
    pub detail: String,
}

impl MonitorReport {
    pub(crate) fn new(name: &str, worst_violation: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            passed: worst_violation <= tolerance,
            worst_violation,
            tolerance,
            time: None,
            state: None,
            observed: None,
            detail: String::new(),
        }
    }

    pub(crate) fn vacuous(name: &str, detail: &str) -> Self {
        let mut r = Self::new(name, 0.0, 0.0);
        r.detail = detail.to_string();
        r
    }

    pub(crate) fn at(mut self, time: f64, state: &[f64]) -> Self {
        self.time = Some(time);
        self.state = Some(state.to_vec());
        self
    }

    pub(crate) fn observed(mut self, v: f64) -> Self {
        self.observed = Some(v);
        self
    }

    pub(crate) fn detail(mut self, d: impl Into<String>) -> Self {
        self.detail = d.into();
        self
    }
}

/// Points used by the dense checks: every stored sample plus interior
/// points of each step, up to and excluding `t_stop`.
pub(crate) fn dense_points(traj: &Trajectory, t_stop: f64, interior: usize) -> Vec<(f64, Vec<f64>)> {
    let mut out = Vec::new();
    let times = traj.times();
    let states = traj.states();
    for (k, seg) in traj.segments().iter().enumerate() {
        if times[k] >= t_stop {
            return out;
        }
        out.push((times[k], states[k].clone()));
        for j in 1..=interior {
            let t = times[k] + seg.h() * j as f64 / (interior + 1) as f64;
            if t >= t_stop {
                return out;
            }
            out.push((t, seg.eval(t)));
        }
    }
    let last = traj.t_final();
    if last < t_stop {
        out.push((last, traj.last_state().to_vec()));
    }
    out
}

/// Project any OVFL trajectory onto the autonomous leading pair `(X_1, Y_1)`.
pub fn project_first_pair(traj: &Trajectory, field: &OvflField) -> Result<(Trajectory, OvflField), AnalysisError> {
    let mut p = field.params;
    p.n_vehicles = 2;
    let pair_field = OvflField::new(p, CoordinateSystem::Relative)?;
    let states = traj
        .states()
        .iter()
        .map(|s| {
            let (x, y) = field.first_pair(s);
            vec![x, y]
        })
        .collect();
    let tr = Trajectory::from_samples(&pair_field, traj.times().to_vec(), states)?;
    Ok((tr, pair_field))
}

pub(crate) fn require_single_pair(traj: &Trajectory, field: &OvflField) -> Result<(), AnalysisError> {
    if field.params.followers() != 1 || traj.dim() != 2 || field.system == CoordinateSystem::Absolute {
        return Err(AnalysisError::Validation(
            "expected a leader/follower trajectory in relative or difference coordinates".into(),
        ));
    }
    Ok(())
}
