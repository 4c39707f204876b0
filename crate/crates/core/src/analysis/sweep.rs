use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::integrator::{integrate, IntegratorConfig, Termination};
use crate::model::{CoordinateSystem, DifferenceState, ModelParams, OvflField, V_MAX};

/// Uniform ranges the sweep draws parameters from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamRanges {
    pub alpha: (f64, f64),
    pub beta: (f64, f64),
    pub vbar: (f64, f64),
    /// Platoon sizes (followers behind the leader), drawn uniformly.
    pub followers: Vec<usize>,
}

impl Default for ParamRanges {
    fn default() -> Self {
        Self {
            alpha: (1.0, 5.0),
            beta: (0.5, 5.0),
            vbar: (0.5, 1.5),
            followers: vec![2],
        }
    }
}

/// Draws initial data in difference coordinates for the given parameters.
pub type InitialSampler = dyn Fn(&mut ChaCha8Rng, &ModelParams) -> DifferenceState + Sync;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCase {
    pub index: usize,
    pub params: ModelParams,
    pub initial: DifferenceState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SweepOutcome {
    Completed { min_gap: f64, collision: bool },
    Rejected { reason: String },
    Failed { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollisionSweepReport {
    pub runs: usize,
    pub rejected: usize,
    pub failed: usize,
    pub collision_events: usize,
    /// Smallest gap of any pair over all completed runs.
    pub min_gap: f64,
    pub min_gap_case: Option<usize>,
    pub cases: Vec<(SweepCase, SweepOutcome)>,
}

/// Gaps uniform in `(0.05, 1.5) * X_inf`, speeds uniform within the limits.
pub fn random_admissible_sampler(rng: &mut ChaCha8Rng, p: &ModelParams) -> DifferenceState {
    let n = p.followers();
    let x_inf = p.x_infinity();
    let xi = (0..n).map(|_| x_inf * rng.gen_range(0.05..1.5)).collect();
    // absolute speeds in [0, V_MAX); the leader drives at vbar
    let mut prev = 0.0;
    let zeta = (0..n)
        .map(|_| {
            let y = p.vbar - rng.gen_range(0.0..V_MAX);
            let z = y - prev;
            prev = y;
            z
        })
        .collect();
    DifferenceState { t: 0.0, xi, zeta }
}

/// Every vehicle at the uniform-flow equilibrium.
pub fn equilibrium_sampler(_rng: &mut ChaCha8Rng, p: &ModelParams) -> DifferenceState {
    let n = p.followers();
    DifferenceState { t: 0.0, xi: vec![p.x_infinity(); n], zeta: vec![0.0; n] }
}

fn case_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn draw(ranges: &ParamRanges, sampler: &InitialSampler, seed: u64, index: usize) -> Result<SweepCase, String> {
    let mut rng = case_rng(seed, index);
    let mut uniform = |(lo, hi): (f64, f64)| if hi > lo { rng.gen_range(lo..=hi) } else { lo };
    let (alpha, beta, vbar) = (uniform(ranges.alpha), uniform(ranges.beta), uniform(ranges.vbar));
    let followers = ranges.followers[rng.gen_range(0..ranges.followers.len())];
    let params = ModelParams::new(alpha, beta, vbar, followers + 1).map_err(|e| e.to_string())?;
    let initial = sampler(&mut rng, &params);
    Ok(SweepCase { index, params, initial })
}

fn run_case(case: &SweepCase, cfg: &IntegratorConfig) -> SweepOutcome {
    let admissible = case
        .initial
        .validate()
        .and_then(|_| case.initial.to_relative().validate_admissible(&case.params));
    if let Err(e) = admissible {
        return SweepOutcome::Rejected { reason: e.to_string() };
    }
    let field = match OvflField::new(case.params, CoordinateSystem::Difference) {
        Ok(f) => f,
        Err(e) => return SweepOutcome::Rejected { reason: e.to_string() },
    };
    match integrate(&field, 0.0, &case.initial.to_flat(), cfg, &[]) {
        Ok(tr) => {
            let n = case.params.followers();
            let min_gap = tr
                .states()
                .iter()
                .flat_map(|s| s[..n].iter().copied())
                .fold(f64::INFINITY, f64::min);
            SweepOutcome::Completed { min_gap, collision: tr.termination == Termination::CollisionGuard }
        }
        Err(e) => SweepOutcome::Failed { reason: e.to_string() },
    }
}

/// Simulate `count` random platoons in parallel and collect the smallest gap
/// and any collision-guard terminations. Inadmissible draws are rejected
/// before simulation. Results depend only on `seed`, not on scheduling.
pub fn no_collision_sweep(
    ranges: &ParamRanges,
    sampler: &InitialSampler,
    count: usize,
    seed: u64,
    cfg: &IntegratorConfig,
) -> CollisionSweepReport {
    let cases: Vec<(SweepCase, SweepOutcome)> = (0..count)
        .into_par_iter()
        .map(|i| match draw(ranges, sampler, seed, i) {
            Ok(case) => {
                let outcome = run_case(&case, cfg);
                (case, outcome)
            }
            Err(reason) => {
                let params = ModelParams { alpha: f64::NAN, beta: f64::NAN, vbar: f64::NAN, n_vehicles: 0 };
                let empty = DifferenceState { t: 0.0, xi: vec![], zeta: vec![] };
                (SweepCase { index: i, params, initial: empty }, SweepOutcome::Rejected { reason })
            }
        })
        .collect();

    let mut report = CollisionSweepReport {
        runs: 0,
        rejected: 0,
        failed: 0,
        collision_events: 0,
        min_gap: f64::INFINITY,
        min_gap_case: None,
        cases: Vec::new(),
    };
    for (case, outcome) in &cases {
        match outcome {
            SweepOutcome::Completed { min_gap, collision } => {
                report.runs += 1;
                report.collision_events += usize::from(*collision);
                if *min_gap < report.min_gap {
                    report.min_gap = *min_gap;
                    report.min_gap_case = Some(case.index);
                }
            }
            SweepOutcome::Rejected { .. } => report.rejected += 1,
            SweepOutcome::Failed { .. } => report.failed += 1,
        }
    }
    report.cases = cases;
    report
}
