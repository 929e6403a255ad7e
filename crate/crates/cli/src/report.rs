//! Machine-readable solve reports.
//!
//! A report carries everything needed to reproduce the run: the full
//! effective configuration, the per-iteration history, and the final
//! feasibility certificate. Identical inputs produce byte-identical
//! reports except for the wall-time fields.

use crate::CliError;
use pathbound::driver::{IterationRecord, SolveReport, SolveStatus};
use pathbound::BoundMethod;
use serde::Serialize;
use std::path::Path;

#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub problem: String,
    pub method: &'static str,
    pub q: usize,
    pub r: usize,
    pub rho: f64,
    pub eps_stat: f64,
    pub eps_act: f64,
    pub max_iters: usize,
    pub seed: u64,
    pub ode_tol: f64,
    pub start_controls: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportFile {
    pub problem: String,
    pub method: &'static str,
    pub status: &'static str,
    pub cost: f64,
    pub iterations: usize,
    /// Final subinterval count per path constraint.
    pub final_constraint_counts: Vec<usize>,
    /// Dense-grid maximum of each constraint at the final control.
    pub certificate_max_h: Vec<f64>,
    pub kkt_trace: Vec<f64>,
    pub per_iteration: Vec<IterationRecord>,
    pub final_u: Vec<f64>,
    pub wall_time_s: f64,
    pub config: ConfigEcho,
}

pub fn build_report(report: &SolveReport, config: ConfigEcho) -> ReportFile {
    ReportFile {
        problem: report.problem.clone(),
        method: method_str(report.method),
        status: match report.status {
            SolveStatus::Converged => "converged",
            SolveStatus::NotConverged => "not-converged",
        },
        cost: report.cost,
        iterations: report.iterations.len(),
        final_constraint_counts: report.final_constraint_counts.clone(),
        certificate_max_h: report.certificate_max_h.clone(),
        kkt_trace: report.iterations.iter().map(|r| r.kkt_stationarity).collect(),
        per_iteration: report.iterations.clone(),
        final_u: report.final_u.clone(),
        wall_time_s: report.wall_time_s,
        config,
    }
}

pub fn method_str(method: BoundMethod) -> &'static str {
    match method {
        BoundMethod::TaylorBernstein => "taylor-bernstein",
        BoundMethod::TaylorModel => "taylor-model",
    }
}

pub fn write_report(report: &ReportFile, path: &Path) -> Result<(), CliError> {
    let json = serde_json::to_string_pretty(report)
        .map_err(|e| CliError::Runtime(format!("cannot serialize report: {e}")))?;
    std::fs::write(path, json + "\n")
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}
