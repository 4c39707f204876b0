use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ovfl::harness::{analyze, run_sweep, simulate, HarnessError, Scenario, SweepRequest, PRESETS};

#[derive(Parser)]
#[command(name = "ovfl", version, about = "OVFL car-following simulation and trajectory diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a scenario and write its trajectory and reports.
    Simulate {
        /// Scenario JSON file or preset name.
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        out: PathBuf,
        /// Exit with status 5 if any monitor fails.
        #[arg(long)]
        strict: bool,
    },
    /// Run a scenario over an alpha x beta grid.
    Sweep {
        #[arg(long)]
        scenario: String,
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        alpha: Vec<f64>,
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        beta: Vec<f64>,
        /// Random admissible starts per cell instead of the scenario's start.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Recompute the monitor report from an exported trajectory CSV.
    Analyze {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// List presets, or print one as scenario JSON.
    Presets { name: Option<String> },
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Simulate { scenario, out, strict } => {
            let scn = Scenario::load(&scenario)?;
            let report = simulate(&scn, Some(&out))?;
            let failed = report.analysis.failed();
            println!(
                "{}: {} samples, termination {:?}, {} of {} monitors failed; outputs in {}",
                report.artifact.scenario.name,
                report.artifact.samples,
                report.artifact.termination,
                failed,
                report.analysis.monitors.len(),
                out.display()
            );
            if strict && failed > 0 {
                return Err(HarnessError::MonitorFailure { failed });
            }
        }
        Command::Sweep { scenario, alpha, beta, samples, seed, out } => {
            let base = Scenario::load(&scenario)?;
            let req = SweepRequest { base, alphas: alpha, betas: beta, samples, seed };
            let summary = run_sweep(&req, &out)?;
            let failed = summary.cells.iter().filter(|c| c.status != "ok").count();
            println!(
                "{} cells ({} failed); summary in {}",
                summary.cells.len(),
                failed,
                out.join("summary.json").display()
            );
        }
        Command::Analyze { csv, scenario, out } => {
            let scn = Scenario::load(&scenario)?;
            let text = std::fs::read_to_string(&csv).map_err(|e| HarnessError::Io {
                path: csv.display().to_string(),
                message: e.to_string(),
            })?;
            let report = analyze(&text, &scn)?;
            std::fs::write(&out, report).map_err(|e| HarnessError::Io {
                path: out.display().to_string(),
                message: e.to_string(),
            })?;
        }
        Command::Presets { name: None } => PRESETS.iter().for_each(|p| println!("{p}")),
        Command::Presets { name: Some(name) } => {
            let scn = Scenario::preset(&name).ok_or_else(|| HarnessError::Validation(format!("unknown preset `{name}`")))?;
            println!("{}", scn.to_json());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
