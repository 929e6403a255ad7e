//! Adaptive partition-refinement driver.
//!
//! The infinite-dimensional path constraints are replaced by one smooth
//! conservative bound per time subinterval, the resulting finite problem is
//! solved, and the partition is refined where the bounds are active until
//! the iterate satisfies the KKT conditions of the original problem within
//! tolerance. Feasible subproblems whose solutions fail the termination
//! test split their active subintervals (Case 1); infeasible subproblems
//! bisect everything (Case 2). Because each bound overestimates the true
//! constraint, every subproblem solution is feasible for the original
//! problem, and the driver re-verifies that on a dense time grid at every
//! iterate as a certificate.
//!
//! Constraints and dynamics are expected to be q-times continuously
//! differentiable in time within each control segment and continuously
//! differentiable in the controls. Piecewise-constant controls break time
//! smoothness at segment breakpoints, so the initial partition aligns with
//! the segments and splits never straddle a breakpoint; every Taylor
//! expansion in time then lives on a single smooth piece.

mod compiled;

pub use compiled::{CompiledProblem, Evaluator};

use crate::bound::{BoundConfigError, BoundMethod, BoundParams};
use crate::expr::Expr;
use crate::interval::Interval;
use crate::nlp::{self, NlpError, NlpOptions, NlpStatus};
use crate::ode::{ControlGrid, OdeError, OdeOptions};
use crate::rng::SplitMix64;
use serde::Serialize;
use std::time::Instant;

/// One path constraint `h(x, u, t) <= 0` with its remainder constant
/// bounding the q-th total time derivative of `h` along trajectories.
#[derive(Debug, Clone)]
pub struct PathConstraint {
    pub expr: Expr,
    pub b_upper: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Tolerances {
    pub eps_stat: f64,
    pub eps_act: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BoundConfig {
    pub q: usize,
    pub r: usize,
    pub rho: f64,
}

/// A full control-parameterized dynamic optimization problem in Mayer form.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub n_x: usize,
    pub dynamics: Vec<Expr>,
    pub x0: Vec<f64>,
    pub grid: ControlGrid,
    /// Terminal cost over the final state.
    pub objective: Expr,
    pub constraints: Vec<PathConstraint>,
    /// Per-channel control bounds, shared by every segment.
    pub u_lower: Vec<f64>,
    pub u_upper: Vec<f64>,
    pub bound: BoundConfig,
    pub tolerances: Tolerances,
    pub ode_tol: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpecError {
    #[error(transparent)]
    Bound(#[from] BoundConfigError),
    #[error(
        "smoothing bias ln(r+1)/rho = {delta:.3e} must stay below eps_act = {eps_act:.3e}; \
         increase rho or relax eps_act, otherwise subdivision cannot meet the tolerance"
    )]
    SmoothingBiasTooLarge { delta: f64, eps_act: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid tolerance: {0}")]
    Tolerance(String),
    #[error("invalid control bounds: channel {0} has lower > upper")]
    ControlBounds(usize),
    #[error("objective must depend on the terminal state only")]
    ObjectiveNotMayer,
}

impl ProblemSpec {
    pub fn n_controls(&self) -> usize {
        self.grid.n_controls()
    }

    pub fn bound_params(&self, constraint: usize) -> BoundParams {
        BoundParams {
            q: self.bound.q,
            r: self.bound.r,
            rho: self.bound.rho,
            b_upper: self.constraints[constraint].b_upper,
        }
    }

    /// Smoothing bias `ln(r+1)/rho`.
    pub fn lse_bias(&self) -> f64 {
        ((self.bound.r + 1) as f64).ln() / self.bound.rho
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        for c in 0..self.constraints.len().max(1) {
            let params = if self.constraints.is_empty() {
                BoundParams { q: self.bound.q, r: self.bound.r, rho: self.bound.rho, b_upper: 0.0 }
            } else {
                self.bound_params(c.min(self.constraints.len() - 1))
            };
            params.validate()?;
        }
        if self.dynamics.len() != self.n_x {
            return Err(SpecError::Dimension(format!(
                "{} dynamics for {} states",
                self.dynamics.len(),
                self.n_x
            )));
        }
        if self.x0.len() != self.n_x {
            return Err(SpecError::Dimension(format!(
                "x0 has length {} for {} states",
                self.x0.len(),
                self.n_x
            )));
        }
        let n_c = self.grid.n_channels();
        if self.u_lower.len() != n_c || self.u_upper.len() != n_c {
            return Err(SpecError::Dimension(format!(
                "control bounds have lengths {}/{} for {} channels",
                self.u_lower.len(),
                self.u_upper.len(),
                n_c
            )));
        }
        for (k, (lo, hi)) in self.u_lower.iter().zip(&self.u_upper).enumerate() {
            if lo > hi {
                return Err(SpecError::ControlBounds(k));
            }
        }
        if !(self.tolerances.eps_stat > 0.0 && self.tolerances.eps_act > 0.0) {
            return Err(SpecError::Tolerance("eps_stat and eps_act must be positive".into()));
        }
        if !(self.ode_tol > 0.0) {
            return Err(SpecError::Tolerance("ode tolerance must be positive".into()));
        }
        let delta = self.lse_bias();
        if delta >= self.tolerances.eps_act {
            return Err(SpecError::SmoothingBiasTooLarge {
                delta,
                eps_act: self.tolerances.eps_act,
            });
        }
        if self.objective.references_control() || self.objective.references_time() {
            return Err(SpecError::ObjectiveNotMayer);
        }
        Ok(())
    }

    /// Converts an integral running cost into Mayer form by appending a
    /// quadrature state with the integrand as its dynamics.
    pub fn with_integral_cost(mut self, integrand: Expr) -> ProblemSpec {
        let new_state = self.n_x;
        self.n_x += 1;
        self.dynamics.push(integrand);
        self.x0.push(0.0);
        self.objective = Expr::add(self.objective, Expr::state(new_state));
        self
    }

    /// Box bounds expanded over the flat decision vector.
    pub fn flat_lower(&self) -> Vec<f64> {
        self.expand_channels(&self.u_lower)
    }

    pub fn flat_upper(&self) -> Vec<f64> {
        self.expand_channels(&self.u_upper)
    }

    /// Default initial guess: the midpoint of the control box.
    pub fn default_start(&self) -> Vec<f64> {
        self.u_lower
            .iter()
            .zip(&self.u_upper)
            .map(|(lo, hi)| 0.5 * (lo + hi))
            .collect::<Vec<_>>()
            .repeat(self.grid.n_segments())
    }

    fn expand_channels(&self, per_channel: &[f64]) -> Vec<f64> {
        per_channel.to_vec().repeat(self.grid.n_segments())
    }

    pub fn ode_options(&self) -> OdeOptions {
        OdeOptions { rtol: self.ode_tol, atol: self.ode_tol, ..OdeOptions::default() }
    }
}

/// One time subinterval carrying its parent control segment and the path
/// constraint it bounds.
#[derive(Debug, Clone, Copy)]
pub struct SubInterval {
    pub span: Interval,
    pub segment: usize,
    pub constraint: usize,
}

/// Ordered subinterval set: per constraint, the spans tile the horizon with
/// exact shared endpoints and never straddle a control segment boundary.
#[derive(Debug, Clone)]
pub struct Partition {
    items: Vec<SubInterval>,
    n_constraints: usize,
}

impl Partition {
    /// One subinterval per control segment per constraint.
    pub fn initial(spec: &ProblemSpec) -> Partition {
        let mut items = Vec::with_capacity(spec.grid.n_segments() * spec.constraints.len());
        for constraint in 0..spec.constraints.len() {
            for segment in 0..spec.grid.n_segments() {
                items.push(SubInterval {
                    span: spec.grid.segment_span(segment),
                    segment,
                    constraint,
                });
            }
        }
        Partition { items, n_constraints: spec.constraints.len() }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[SubInterval] {
        &self.items
    }

    pub fn counts_per_constraint(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_constraints];
        for item in &self.items {
            counts[item.constraint] += 1;
        }
        counts
    }

    pub fn max_width(&self) -> f64 {
        self.items.iter().map(|i| i.span.width()).fold(0.0, f64::max)
    }

    /// Case 1 update: split the listed subintervals, each into the count
    /// the rule assigns it; everything else is kept.
    pub fn split(&self, indices: &[usize], counts: &[usize]) -> Partition {
        debug_assert_eq!(indices.len(), counts.len());
        let mut items = Vec::with_capacity(self.items.len() + indices.len());
        for (idx, item) in self.items.iter().enumerate() {
            match indices.iter().position(|&i| i == idx) {
                Some(pos) => {
                    for part in item.span.split_equal(counts[pos]) {
                        items.push(SubInterval { span: part, ..*item });
                    }
                }
                None => items.push(*item),
            }
        }
        Partition { items, n_constraints: self.n_constraints }
    }

    /// Case 2 update: bisect every subinterval.
    pub fn bisect_all(&self) -> Partition {
        let mut items = Vec::with_capacity(2 * self.items.len());
        for item in &self.items {
            for part in item.span.split_equal(2) {
                items.push(SubInterval { span: part, ..*item });
            }
        }
        Partition { items, n_constraints: self.n_constraints }
    }

    /// Exact covering check: per constraint, spans are contiguous with
    /// shared endpoints and tile `horizon`.
    pub fn covers_exactly(&self, horizon: Interval) -> bool {
        for constraint in 0..self.n_constraints {
            let spans: Vec<Interval> = self
                .items
                .iter()
                .filter(|i| i.constraint == constraint)
                .map(|i| i.span)
                .collect();
            if spans.is_empty()
                || spans[0].lo() != horizon.lo()
                || spans[spans.len() - 1].hi() != horizon.hi()
            {
                return false;
            }
            for w in spans.windows(2) {
                if w[0].hi() != w[1].lo() {
                    return false;
                }
            }
        }
        true
    }
}

/// Number of equal parts an active subinterval is split into so that the
/// remainder envelope alone fits inside the tolerance budget left after
/// the smoothing bias: `max(2, ceil(width / (2^q q! (eps_act - bias) /
/// B_U)^(1/q)))`. A zero remainder constant still bisects, to tighten the
/// polynomial enclosure.
pub fn subdivision_count(width: f64, q: usize, b_upper: f64, eps_act: f64, bias: f64) -> usize {
    assert!(eps_act > bias, "tolerance budget must exceed the smoothing bias");
    if b_upper == 0.0 {
        return 2;
    }
    let mut q_fact = 1.0;
    for i in 2..=q {
        q_fact *= i as f64;
    }
    let denom = (2f64.powi(q as i32) * q_fact * (eps_act - bias) / b_upper).powf(1.0 / q as f64);
    (width / denom).ceil().max(2.0) as usize
}

/// Splits bound values into active (within `tol` of zero) and inactive
/// subinterval indices.
pub fn detect_active(bound_values: &[f64], tol: f64) -> (Vec<usize>, Vec<usize>) {
    detect_active_with_multipliers(bound_values, &vec![0.0; bound_values.len()], tol, f64::MAX)
}

/// Active detection that also honors complementarity: a subinterval whose
/// bound carries a positive multiplier is binding even if the solver left
/// its value slightly below the detection band.
pub fn detect_active_with_multipliers(
    bound_values: &[f64],
    multipliers: &[f64],
    tol: f64,
    multiplier_tol: f64,
) -> (Vec<usize>, Vec<usize>) {
    let mut active = Vec::new();
    let mut inactive = Vec::new();
    for (i, &v) in bound_values.iter().enumerate() {
        let lam = multipliers.get(i).copied().unwrap_or(0.0);
        if v >= -tol || lam > multiplier_tol {
            active.push(i);
        } else {
            inactive.push(i);
        }
    }
    (active, inactive)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CaseTaken {
    Terminated,
    Case1,
    Case2,
}

#[derive(Debug, Clone, Serialize)]
pub struct IterationRecord {
    pub k: usize,
    pub case: CaseTaken,
    /// Subinterval count per path constraint at this iteration's problem.
    pub n_subintervals: Vec<usize>,
    pub cost: f64,
    /// Stationarity of the original problem's KKT system (original
    /// constraint gradients at subinterval midpoints).
    pub kkt_stationarity: f64,
    pub nlp_status: String,
    pub nlp_iterations: usize,
    /// Indices of active subintervals in this iteration's partition.
    pub active: Vec<usize>,
    /// Dense-grid maximum of each original constraint at this iterate;
    /// all entries nonpositive certify feasibility.
    pub max_h_dense: Vec<f64>,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Converged,
    NotConverged,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub problem: String,
    pub method: BoundMethod,
    pub status: SolveStatus,
    pub cost: f64,
    pub final_u: Vec<f64>,
    pub iterations: Vec<IterationRecord>,
    pub final_constraint_counts: Vec<usize>,
    /// Dense-grid maximum of each constraint at the final iterate.
    pub certificate_max_h: Vec<f64>,
    pub wall_time_s: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum DriverError {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error(transparent)]
    Nlp(#[from] NlpError),
}

#[derive(Debug, Clone, Copy)]
pub struct DriverOptions {
    pub max_iters: usize,
    /// Bound value within this of zero marks a subinterval active.
    pub active_tol: f64,
    /// Points per constraint in the dense feasibility certificate.
    pub dense_grid: usize,
    /// Multipliers below this are treated as inactive.
    pub multiplier_tol: f64,
    pub nlp: NlpOptions,
}

impl Default for DriverOptions {
    fn default() -> Self {
        DriverOptions {
            max_iters: 20,
            active_tol: 1e-6,
            dense_grid: 10_000,
            multiplier_tol: 1e-10,
            // the outer loop checks its own stationarity against the
            // original constraint gradients at eps_stat; pushing the inner
            // solves far past that buys nothing
            nlp: NlpOptions { tol: 1e-5, ..NlpOptions::default() },
        }
    }
}

/// Runs the refinement loop from `u0` (or the box midpoint) and returns the
/// full iteration history.
pub fn run(
    spec: &ProblemSpec,
    method: BoundMethod,
    u0: Option<Vec<f64>>,
    opts: &DriverOptions,
) -> Result<SolveReport, DriverError> {
    spec.validate()?;
    let started = Instant::now();
    let compiled = CompiledProblem::new(spec.clone());
    let flat_lower = spec.flat_lower();
    let flat_upper = spec.flat_upper();
    let mut u = u0.unwrap_or_else(|| spec.default_start());
    assert_eq!(u.len(), spec.n_controls(), "start control dimension mismatch");

    let mut partition = Partition::initial(spec);
    let mut iterations: Vec<IterationRecord> = Vec::new();
    let bias = method.smoothing_bias(&BoundParams {
        q: spec.bound.q,
        r: spec.bound.r,
        rho: spec.bound.rho,
        b_upper: 0.0,
    });

    for k in 0..opts.max_iters {
        let iter_started = Instant::now();
        let mut evaluator = Evaluator::new(&compiled, &partition, method);
        let result = nlp::solve(&mut evaluator, &flat_lower, &flat_upper, &u, &opts.nlp)?;

        if result.status == NlpStatus::Infeasible {
            // Case 2: the inner approximation is too conservative at this
            // resolution; bisect everything and retry from the same point
            iterations.push(IterationRecord {
                k,
                case: CaseTaken::Case2,
                n_subintervals: partition.counts_per_constraint(),
                cost: f64::NAN,
                kkt_stationarity: f64::NAN,
                nlp_status: "infeasible".into(),
                nlp_iterations: result.iterations,
                active: Vec::new(),
                max_h_dense: Vec::new(),
                wall_time_s: iter_started.elapsed().as_secs_f64(),
            });
            partition = partition.bisect_all();
            continue;
        }

        // feasible iterate (optimal, or the best of a truncated solve)
        u = result.u.clone();
        let point = compiled.analyze(&u, &partition, method, opts.dense_grid)?;

        let (active, _inactive) = detect_active_with_multipliers(
            &point.bound_values,
            &result.lambda,
            opts.active_tol,
            opts.multiplier_tol,
        );

        // termination per the original problem's KKT system
        let mut sel_grads: Vec<Vec<f64>> = Vec::new();
        let mut sel_lambda: Vec<f64> = Vec::new();
        let mut sel_h: Vec<f64> = Vec::new();
        for (i, &lam) in result.lambda.iter().enumerate() {
            if lam > opts.multiplier_tol {
                sel_grads.push(point.h_midpoint_grads[i].clone());
                sel_lambda.push(lam);
                sel_h.push(point.h_midpoint[i]);
            }
        }
        let check = nlp::kkt_residuals(
            &u,
            &flat_lower,
            &flat_upper,
            &point.objective_grad,
            &sel_grads,
            &sel_lambda,
            &sel_h,
            spec.tolerances.eps_act,
        );
        let feasible_everywhere = point.max_h_dense.iter().all(|&m| m <= 0.0);
        let stationary = check.stationarity <= spec.tolerances.eps_stat;
        let complementary = check.complementarity.iter().all(|&ok| ok);
        let nlp_clean = result.status == NlpStatus::Optimal;
        let terminated =
            nlp_clean && stationary && complementary && feasible_everywhere;

        let record = IterationRecord {
            k,
            case: if terminated { CaseTaken::Terminated } else { CaseTaken::Case1 },
            n_subintervals: partition.counts_per_constraint(),
            cost: point.cost,
            kkt_stationarity: check.stationarity,
            nlp_status: match result.status {
                NlpStatus::Optimal => "optimal".into(),
                NlpStatus::IterationLimit => "iteration-limit".into(),
                NlpStatus::Infeasible => unreachable!(),
            },
            nlp_iterations: result.iterations,
            active: active.clone(),
            max_h_dense: point.max_h_dense.clone(),
            wall_time_s: iter_started.elapsed().as_secs_f64(),
        };

        if terminated {
            let final_counts = partition.counts_per_constraint();
            iterations.push(record);
            return Ok(SolveReport {
                problem: spec.name.clone(),
                method,
                status: SolveStatus::Converged,
                cost: point.cost,
                final_u: u,
                iterations,
                final_constraint_counts: final_counts,
                certificate_max_h: point.max_h_dense,
                wall_time_s: started.elapsed().as_secs_f64(),
            });
        }

        // Case 1: split each active subinterval by the tolerance-driven
        // rule; an empty active set cannot refine anything, so fall back to
        // a global bisection rather than looping on a frozen partition
        iterations.push(record);
        if active.is_empty() {
            partition = partition.bisect_all();
        } else {
            let counts: Vec<usize> = active
                .iter()
                .map(|&i| {
                    let item = partition.items()[i];
                    subdivision_count(
                        item.span.width(),
                        spec.bound.q,
                        spec.constraints[item.constraint].b_upper,
                        spec.tolerances.eps_act,
                        bias,
                    )
                })
                .collect();
            partition = partition.split(&active, &counts);
        }
    }

    // out of iterations: report the last state honestly
    let point = compiled.analyze(&u, &partition, method, opts.dense_grid)?;
    Ok(SolveReport {
        problem: spec.name.clone(),
        method,
        status: SolveStatus::NotConverged,
        cost: point.cost,
        final_u: u,
        iterations,
        final_constraint_counts: partition.counts_per_constraint(),
        certificate_max_h: point.max_h_dense,
        wall_time_s: started.elapsed().as_secs_f64(),
    })
}

/// Sampling heuristic for the remainder constant of constraint `index`:
/// maximize `|d^q h / dt^q|` over random controls and a time grid, then
/// inflate by 1.5.
///
/// Not rigorous: it can undershoot the true bound between samples. Meant
/// for exploring new problems; published problems should carry vetted
/// constants.
pub fn estimate_remainder_constant(
    spec: &ProblemSpec,
    index: usize,
    n_controls: usize,
    seed: u64,
) -> Result<f64, DriverError> {
    use crate::expr::{lie_derivative, LieTable};
    use crate::ode::{integrate, CompiledDynamics, CompiledLie, eval_d};

    let q = spec.bound.q;
    let h = &spec.constraints[index].expr;
    let qth = lie_derivative(h, &spec.dynamics, q);
    let table = LieTable {
        orders: vec![qth],
        dx: vec![Vec::new()],
        du: vec![Vec::new()],
    };
    let lie = CompiledLie::new(&table);
    let dynamics = CompiledDynamics::new(&spec.dynamics, spec.n_x, spec.grid.n_channels());
    let opts = spec.ode_options();
    let mut rng = SplitMix64::new(seed);
    let (lower, upper) = (spec.flat_lower(), spec.flat_upper());
    let mut best = 0.0f64;
    for _ in 0..n_controls {
        let u: Vec<f64> = lower
            .iter()
            .zip(&upper)
            .map(|(&lo, &hi)| rng.next_in(lo, hi))
            .collect();
        let traj = integrate(&dynamics, &spec.x0, &u, &spec.grid, &opts)?;
        for i in 0..=200 {
            let t = spec.grid.t0()
                + (spec.grid.tf() - spec.grid.t0()) * i as f64 / 200.0;
            let d = eval_d(&traj, &lie, t)?;
            best = best.max(d[0].abs());
        }
    }
    Ok(1.5 * best)
}

#[cfg(test)]
mod tests;
