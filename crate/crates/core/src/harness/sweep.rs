use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::run::simulate;
use super::scenario::Scenario;
use super::{to_json_string, write_file, HarnessError, VERSION};
use crate::analysis::{no_collision_sweep, random_admissible_sampler, ParamRanges};

pub struct SweepRequest {
    pub base: Scenario,
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    /// Random admissible starts per cell instead of the scenario's own start.
    pub samples: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledCell {
    pub runs: usize,
    pub rejected: usize,
    pub failed: usize,
    pub collision_events: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub index: usize,
    pub alpha: f64,
    pub beta: f64,
    pub dir: String,
    /// `ok` or `failed`.
    pub status: String,
    pub error: Option<String>,
    pub entered_ball: Option<bool>,
    pub entry_time: Option<f64>,
    pub sign_changes: Option<usize>,
    pub min_gap: Option<f64>,
    pub monitors_failed: Option<usize>,
    pub sampled: Option<SampledCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub version: String,
    pub scenario: String,
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub samples: Option<usize>,
    pub seed: u64,
    pub cells: Vec<CellSummary>,
}

/// Parallelism cap from `OVFL_NUM_WORKERS`, defaulting to the logical cores.
pub fn worker_count() -> usize {
    std::env::var("OVFL_NUM_WORKERS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn run_cell(req: &SweepRequest, seed: u64, index: usize, alpha: f64, beta: f64, out: &Path) -> CellSummary {
    let dir = format!("cell_{index:03}");
    let mut cell = CellSummary {
        index,
        alpha,
        beta,
        dir: dir.clone(),
        status: "ok".into(),
        error: None,
        entered_ball: None,
        entry_time: None,
        sign_changes: None,
        min_gap: None,
        monitors_failed: None,
        sampled: None,
    };
    let mut scn = req.base.clone();
    scn.name = format!("{}-a{alpha}-b{beta}", req.base.name);
    scn.params.alpha = alpha;
    scn.params.beta = beta;
    let cell_dir = out.join(&dir);

    let result = match req.samples {
        None => simulate(&scn, Some(&cell_dir)).map(|r| {
            let conv = r.analysis.energy.convergence.as_ref();
            cell.entered_ball = conv.map(|c| c.entered_ball);
            cell.entry_time = conv.and_then(|c| c.entry_time);
            cell.sign_changes = conv.map(|c| c.sign_changes);
            cell.min_gap = Some(r.analysis.min_gap);
            cell.monitors_failed = Some(r.analysis.failed());
        }),
        Some(count) => scn.validate().and_then(|_| {
            let ranges = ParamRanges {
                alpha: (alpha, alpha),
                beta: (beta, beta),
                vbar: (scn.params.vbar, scn.params.vbar),
                followers: vec![scn.params.followers()],
            };
            let report = no_collision_sweep(&ranges, &random_admissible_sampler, count, seed, &scn.integrator);
            cell.min_gap = report.min_gap.is_finite().then_some(report.min_gap);
            cell.sampled = Some(SampledCell {
                runs: report.runs,
                rejected: report.rejected,
                failed: report.failed,
                collision_events: report.collision_events,
            });
            std::fs::create_dir_all(&cell_dir).map_err(|e| HarnessError::io(&cell_dir, e))?;
            write_file(&cell_dir.join("scenario.json"), &(scn.resolved().to_json() + "\n"))?;
            write_file(&cell_dir.join("runs.json"), &to_json_string(&report))
        }),
    };
    if let Err(e) = result {
        cell.status = "failed".into();
        cell.error = Some(e.to_string());
    }
    cell
}

/// Run one cell per `(alpha, beta)` pair of the grid, in parallel, and write
/// `summary.json` next to the per-cell directories.
pub fn run_sweep(req: &SweepRequest, out: &Path) -> Result<SweepSummary, HarnessError> {
    if req.alphas.is_empty() || req.betas.is_empty() {
        return Err(HarnessError::Validation("sweep grid is empty: give at least one alpha and one beta".into()));
    }
    if req.samples == Some(0) {
        return Err(HarnessError::Validation("--samples must be positive".into()));
    }
    req.base.validate()?;
    let seed = req.seed.unwrap_or(req.base.seed);
    let grid: Vec<(usize, f64, f64)> = req
        .alphas
        .iter()
        .flat_map(|&a| req.betas.iter().map(move |&b| (a, b)))
        .enumerate()
        .map(|(i, (a, b))| (i, a, b))
        .collect();
    std::fs::create_dir_all(out).map_err(|e| HarnessError::io(out, e))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count())
        .build()
        .map_err(|e| HarnessError::Validation(format!("cannot start worker pool: {e}")))?;
    let cells: Vec<CellSummary> =
        pool.install(|| grid.par_iter().map(|&(i, a, b)| run_cell(req, seed, i, a, b, out)).collect());

    let summary = SweepSummary {
        version: VERSION.into(),
        scenario: req.base.name.clone(),
        alphas: req.alphas.clone(),
        betas: req.betas.clone(),
        samples: req.samples,
        seed,
        cells,
    };
    write_file(&out.join("summary.json"), &to_json_string(&summary))?;
    Ok(summary)
}
