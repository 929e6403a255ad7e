//! Problem file format and loading.
//!
//! Problems are JSON documents holding the dynamics, constraints, and
//! solver configuration as expression strings and plain numbers. An
//! optional integral running cost is converted to Mayer form during
//! loading by appending a quadrature state.

use crate::CliError;
use pathbound::driver::{BoundConfig, PathConstraint, ProblemSpec, Tolerances};
use pathbound::expr::parse;
use pathbound::ControlGrid;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemFile {
    pub name: String,
    /// State names; only the count matters to the solver.
    pub states: Vec<String>,
    pub controls: ControlsSection,
    /// One expression string per state.
    pub dynamics: Vec<String>,
    pub x0: Vec<f64>,
    pub horizon: HorizonSection,
    pub objective: ExprSection,
    /// Optional integral running cost, converted to Mayer form on load.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub integral_cost: Option<ExprSection>,
    pub constraints: Vec<ConstraintSection>,
    pub bound: BoundSection,
    pub tolerances: ToleranceSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ControlsSection {
    pub segments: usize,
    /// Per-channel bounds; the channel count is their length.
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HorizonSection {
    pub t0: f64,
    pub tf: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExprSection {
    pub expr: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstraintSection {
    pub expr: String,
    /// Remainder constant bounding the q-th time derivative of the
    /// constraint over the horizon and control box.
    pub b_upper: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BoundSection {
    pub q: usize,
    pub r: usize,
    pub rho: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ToleranceSection {
    pub eps_stat: f64,
    pub eps_act: f64,
}

/// Command-line overrides applied on top of the problem file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub q: Option<usize>,
    pub r: Option<usize>,
    pub rho: Option<f64>,
    pub eps_stat: Option<f64>,
    pub eps_act: Option<f64>,
}

pub fn read_problem_file(path: &Path) -> Result<ProblemFile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("cannot parse {}: {e}", path.display())))
}

/// Builds a validated [`ProblemSpec`] from a problem file plus overrides.
pub fn build_spec(file: &ProblemFile, overrides: &Overrides) -> Result<ProblemSpec, CliError> {
    let n_x = file.states.len();
    let n_c = file.controls.lower.len();
    if file.controls.upper.len() != n_c {
        return Err(CliError::Config(format!(
            "control bounds disagree on channel count: {} lower vs {} upper",
            n_c,
            file.controls.upper.len()
        )));
    }
    if file.horizon.tf <= file.horizon.t0 {
        return Err(CliError::Config("horizon must satisfy t0 < tf".into()));
    }
    if file.controls.segments == 0 {
        return Err(CliError::Config("need at least one control segment".into()));
    }
    if file.dynamics.len() != n_x {
        return Err(CliError::Config(format!(
            "{} dynamics expressions for {} states",
            file.dynamics.len(),
            n_x
        )));
    }

    let parse_in = |text: &str, what: &str| {
        parse(text, n_x, n_c)
            .map_err(|e| CliError::Config(format!("{what}: {e}")))
    };

    let dynamics = file
        .dynamics
        .iter()
        .enumerate()
        .map(|(i, d)| parse_in(d, &format!("dynamics[{i}]")))
        .collect::<Result<Vec<_>, _>>()?;
    let objective = parse_in(&file.objective.expr, "objective")?;
    let constraints = file
        .constraints
        .iter()
        .enumerate()
        .map(|(i, c)| {
            Ok(PathConstraint {
                expr: parse_in(&c.expr, &format!("constraints[{i}]"))?,
                b_upper: c.b_upper,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    let mut spec = ProblemSpec {
        name: file.name.clone(),
        n_x,
        dynamics,
        x0: file.x0.clone(),
        grid: ControlGrid::uniform(file.horizon.t0, file.horizon.tf, file.controls.segments, n_c),
        objective,
        constraints,
        u_lower: file.controls.lower.clone(),
        u_upper: file.controls.upper.clone(),
        bound: BoundConfig {
            q: overrides.q.unwrap_or(file.bound.q),
            r: overrides.r.unwrap_or(file.bound.r),
            rho: overrides.rho.unwrap_or(file.bound.rho),
        },
        tolerances: Tolerances {
            eps_stat: overrides.eps_stat.unwrap_or(file.tolerances.eps_stat),
            eps_act: overrides.eps_act.unwrap_or(file.tolerances.eps_act),
        },
        ode_tol: 1e-8,
    };

    if let Some(integral) = &file.integral_cost {
        let integrand = parse_in(&integral.expr, "integral_cost")?;
        spec = spec.with_integral_cost(integrand);
    }

    spec.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(spec)
}

/// Parses a start-control override: either one value per channel
/// (replicated across segments) or the full flat vector.
pub fn parse_start_controls(
    text: &str,
    spec: &ProblemSpec,
) -> Result<Vec<f64>, CliError> {
    let values: Vec<f64> = text
        .split(',')
        .map(|v| {
            v.trim()
                .parse()
                .map_err(|_| CliError::Config(format!("invalid start control `{v}`")))
        })
        .collect::<Result<_, _>>()?;
    let n_c = spec.grid.n_channels();
    let n_u = spec.n_controls();
    if values.len() == n_c {
        Ok(values.repeat(spec.grid.n_segments()))
    } else if values.len() == n_u {
        Ok(values)
    } else {
        Err(CliError::Config(format!(
            "start controls need {n_c} (per channel) or {n_u} (flat) values, got {}",
            values.len()
        )))
    }
}
