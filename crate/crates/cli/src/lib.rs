//! Command implementations for the `pathbound` binary.
//!
//! Everything the binary does lives here so integration tests can drive
//! the commands directly. Exit-code policy: 0 converged, 1 configuration
//! or load error, 2 non-convergence, 3 runtime failure.

pub mod problem;
pub mod report;
pub mod studies;

use pathbound::driver::{self, DriverOptions, SolveStatus};
use pathbound::BoundMethod;
use report::{build_report, ConfigEcho, ReportFile};
use serde::Deserialize;
use std::path::Path;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad input or configuration; maps to exit code 1.
    #[error("{0}")]
    Config(String),
    /// Failure while running or writing output; maps to exit code 3.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveArgs {
    pub problem: std::path::PathBuf,
    pub method: BoundMethod,
    pub out: std::path::PathBuf,
    pub overrides: problem::Overrides,
    pub max_iters: Option<usize>,
    pub seed: u64,
    pub start_controls: Option<String>,
}

/// Runs a solve and writes the report; returns the report and the exit
/// code (0 converged, 2 not converged).
pub fn cmd_solve(args: &SolveArgs) -> Result<(ReportFile, i32), CliError> {
    let file = problem::read_problem_file(&args.problem)?;
    let spec = problem::build_spec(&file, &args.overrides)?;
    let start = match &args.start_controls {
        Some(text) => problem::parse_start_controls(text, &spec)?,
        None => spec.default_start(),
    };

    let opts = DriverOptions {
        max_iters: args.max_iters.unwrap_or(20),
        ..DriverOptions::default()
    };
    let solve = driver::run(&spec, args.method, Some(start.clone()), &opts)
        .map_err(|e| CliError::Runtime(e.to_string()))?;

    let config = ConfigEcho {
        problem: spec.name.clone(),
        method: report::method_str(args.method),
        q: spec.bound.q,
        r: spec.bound.r,
        rho: spec.bound.rho,
        eps_stat: spec.tolerances.eps_stat,
        eps_act: spec.tolerances.eps_act,
        max_iters: opts.max_iters,
        seed: args.seed,
        ode_tol: spec.ode_tol,
        start_controls: start,
    };
    let report_file = build_report(&solve, config);
    report::write_report(&report_file, &args.out)?;
    let code = match solve.status {
        SolveStatus::Converged => EXIT_OK,
        SolveStatus::NotConverged => EXIT_NOT_CONVERGED,
    };
    Ok((report_file, code))
}

#[derive(Debug, Clone)]
pub struct GapStudyArgs {
    pub problem: std::path::PathBuf,
    pub samples: usize,
    pub seed: u64,
    pub out: std::path::PathBuf,
}

pub fn cmd_gap_study(args: &GapStudyArgs) -> Result<studies::GapStudy, CliError> {
    let file = problem::read_problem_file(&args.problem)?;
    let spec = problem::build_spec(&file, &problem::Overrides::default())?;
    let study = studies::gap_study(&spec, args.samples, args.seed)?;
    std::fs::write(&args.out, studies::gap_study_csv(&study))
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", args.out.display())))?;
    Ok(study)
}

pub fn cmd_rate_study(out: &Path) -> Result<studies::RateStudy, CliError> {
    let study = studies::rate_study();
    std::fs::write(out, studies::rate_study_csv(&study))
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", out.display())))?;
    Ok(study)
}

/// Minimal projection of a report used by the `table` subcommand.
#[derive(Debug, Clone, Deserialize)]
struct ReportSummary {
    problem: String,
    method: String,
    iterations: usize,
    final_constraint_counts: Vec<usize>,
    cost: f64,
    wall_time_s: f64,
}

/// Aggregates solve reports into a comparison table (CSV): one row per
/// (problem, method) with iteration count, final constraint counts joined
/// with `+` across path constraints, wall time, and cost.
pub fn cmd_table(reports: &[std::path::PathBuf], out: &Path) -> Result<String, CliError> {
    if reports.is_empty() {
        return Err(CliError::Config("table needs at least one report file".into()));
    }
    let mut csv = String::from("problem,method,iterations,constraints,wall_time_s,cost\n");
    for path in reports {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let summary: ReportSummary = serde_json::from_str(&text).map_err(|e| {
            CliError::Config(format!("{} is not a solve report: {e}", path.display()))
        })?;
        let counts = summary
            .final_constraint_counts
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join("+");
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            summary.problem,
            summary.method,
            summary.iterations,
            counts,
            summary.wall_time_s,
            summary.cost
        ));
    }
    std::fs::write(out, &csv)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", out.display())))?;
    Ok(csv)
}
