//! Compiled problem artifacts shared across driver iterations, and the
//! callback adapter that presents one partition's approximation problem to
//! the NLP solver.

use super::{DriverError, Partition, ProblemSpec, SubInterval};
use crate::bernstein::TransformCache;
use crate::bound::{self, BoundMethod};
use crate::expr::{Bindings, LieTable, Program};
use crate::nlp::{GradEval, NlpCallbacks, NlpError, PointEval};
use crate::ode::{
    self, CompiledDynamics, CompiledLie, OdeError, Trajectory,
};

/// Expression programs compiled once per problem: dynamics with Jacobians,
/// Lie tables per constraint, the objective with its state partials, and
/// the raw constraints for dense sampling.
#[derive(Debug)]
pub struct CompiledProblem {
    spec: ProblemSpec,
    dynamics: CompiledDynamics,
    lies: Vec<CompiledLie>,
    objective: Program,
    constraints: Vec<Program>,
}

/// Everything the driver needs to know about one control iterate.
#[derive(Debug, Clone)]
pub struct PointAnalysis {
    pub cost: f64,
    pub objective_grad: Vec<f64>,
    /// Bound value per subinterval (partition order).
    pub bound_values: Vec<f64>,
    /// Original constraint value at each subinterval midpoint.
    pub h_midpoint: Vec<f64>,
    /// Gradient of the original constraint at each midpoint.
    pub h_midpoint_grads: Vec<Vec<f64>>,
    /// Dense-grid maximum of each constraint over the horizon.
    pub max_h_dense: Vec<f64>,
}

impl CompiledProblem {
    pub fn new(spec: ProblemSpec) -> CompiledProblem {
        let n_x = spec.n_x;
        let n_c = spec.grid.n_channels();
        let dynamics = CompiledDynamics::new(&spec.dynamics, n_x, n_c);
        let lies = spec
            .constraints
            .iter()
            .map(|c| CompiledLie::new(&LieTable::build(&c.expr, &spec.dynamics, spec.bound.q, n_x, n_c)))
            .collect();
        let mut objective_batch = vec![spec.objective.clone()];
        for k in 0..n_x {
            objective_batch.push(spec.objective.diff(crate::expr::Var::State(k)));
        }
        let objective = Program::compile(&objective_batch);
        let constraints = spec
            .constraints
            .iter()
            .map(|c| Program::compile(std::slice::from_ref(&c.expr)))
            .collect();
        CompiledProblem { spec, dynamics, lies, objective, constraints }
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn integrate_values(&self, u: &[f64]) -> Result<Trajectory, OdeError> {
        ode::integrate(&self.dynamics, &self.spec.x0, u, &self.spec.grid, &self.spec.ode_options())
    }

    pub fn integrate_with_sensitivities(&self, u: &[f64]) -> Result<Trajectory, OdeError> {
        ode::integrate_with_sensitivities(
            &self.dynamics,
            &self.spec.x0,
            u,
            &self.spec.grid,
            &self.spec.ode_options(),
        )
    }

    /// Terminal cost at the trajectory's final state.
    pub fn objective_value(&self, traj: &Trajectory) -> Result<f64, OdeError> {
        Ok(self.objective_outputs(traj)?[0])
    }

    /// `dPhi/du = Phi_x(x(tf)) S(tf)`.
    pub fn objective_gradient(&self, traj: &Trajectory) -> Result<Vec<f64>, OdeError> {
        let outputs = self.objective_outputs(traj)?;
        let n_x = self.spec.n_x;
        let n_u = self.spec.n_controls();
        let mut grad = vec![0.0; n_u];
        for (j, g) in grad.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in 0..n_x {
                acc += outputs[1 + k] * traj.final_sensitivity(k, j);
            }
            *g = acc;
        }
        Ok(grad)
    }

    fn objective_outputs(&self, traj: &Trajectory) -> Result<Vec<f64>, OdeError> {
        let tf = traj.tf();
        let bindings = Bindings { x: traj.final_state(), u: traj.control_at(tf), t: tf };
        let mut scratch = vec![0.0; self.objective.scratch_len()];
        let mut out = vec![0.0; self.objective.n_outputs()];
        self.objective.eval_into(&bindings, &mut scratch, &mut out)?;
        Ok(out)
    }

    /// Upper-bound value for one subinterval.
    pub fn bound_value(
        &self,
        traj: &Trajectory,
        item: &SubInterval,
        method: BoundMethod,
        cache: &mut TransformCache,
    ) -> Result<f64, OdeError> {
        let params = self.spec.bound_params(item.constraint);
        let c = item.span.midpoint();
        let width = item.span.width();
        let d = ode::eval_d(traj, &self.lies[item.constraint], c)?;
        Ok(match method {
            BoundMethod::TaylorBernstein => {
                let m = cache.get(params.q, params.r, width);
                bound::h_tb(&params, &m, &d).value
            }
            BoundMethod::TaylorModel => bound::taylor_model_bound(&params, &d, width),
        })
    }

    /// Upper-bound value and control gradient for one subinterval; the
    /// trajectory must carry sensitivities.
    pub fn bound_value_grad(
        &self,
        traj: &Trajectory,
        item: &SubInterval,
        method: BoundMethod,
        cache: &mut TransformCache,
    ) -> Result<(f64, Vec<f64>), OdeError> {
        let params = self.spec.bound_params(item.constraint);
        let c = item.span.midpoint();
        let width = item.span.width();
        let lie = &self.lies[item.constraint];
        let d = ode::eval_d(traj, lie, c)?;
        let grad_d = ode::eval_grad_d(traj, lie, c)?;
        Ok(match method {
            BoundMethod::TaylorBernstein => {
                let m = cache.get(params.q, params.r, width);
                let ev = bound::h_tb(&params, &m, &d);
                let grad = bound::grad_h_tb(&ev, &m, &grad_d);
                (ev.value, grad)
            }
            BoundMethod::TaylorModel => (
                bound::taylor_model_bound(&params, &d, width),
                bound::grad_taylor_model(&params, &d, width, &grad_d),
            ),
        })
    }

    /// Maximum of constraint `index` over a uniform grid on the horizon.
    pub fn dense_max_h(
        &self,
        traj: &Trajectory,
        index: usize,
        points: usize,
    ) -> Result<f64, OdeError> {
        self.dense_max_on(traj, index, crate::interval::Interval::new(traj.t0(), traj.tf()), points)
    }

    /// Maximum of constraint `index` over a uniform grid on one time span.
    pub fn dense_max_on(
        &self,
        traj: &Trajectory,
        index: usize,
        span: crate::interval::Interval,
        points: usize,
    ) -> Result<f64, OdeError> {
        let prog = &self.constraints[index];
        let mut scratch = vec![0.0; prog.scratch_len()];
        let mut out = [0.0];
        let mut x = vec![0.0; self.spec.n_x];
        let (t0, width) = (span.lo(), span.width());
        let mut max_h = f64::NEG_INFINITY;
        for i in 0..=points {
            let t = t0 + width * i as f64 / points as f64;
            traj.state_into(t, &mut x)?;
            let bindings = Bindings { x: &x, u: traj.control_at(t), t };
            prog.eval_into(&bindings, &mut scratch, &mut out)?;
            max_h = max_h.max(out[0]);
        }
        Ok(max_h)
    }

    /// Original constraint value and control gradient at a midpoint
    /// (order-zero row of the Lie machinery).
    pub fn h_at_midpoint(
        &self,
        traj: &Trajectory,
        item: &SubInterval,
    ) -> Result<(f64, Vec<f64>), OdeError> {
        let lie = &self.lies[item.constraint];
        let c = item.span.midpoint();
        let d = ode::eval_d(traj, lie, c)?;
        let grad_d = ode::eval_grad_d(traj, lie, c)?;
        Ok((d[0], grad_d[0].clone()))
    }

    /// Full per-iterate analysis used by the driver's termination test,
    /// records, and certificates.
    pub fn analyze(
        &self,
        u: &[f64],
        partition: &Partition,
        method: BoundMethod,
        dense_grid: usize,
    ) -> Result<PointAnalysis, DriverError> {
        let traj = self.integrate_with_sensitivities(u)?;
        let mut cache = TransformCache::new();
        let cost = self.objective_value(&traj)?;
        let objective_grad = self.objective_gradient(&traj)?;
        let mut bound_values = Vec::with_capacity(partition.len());
        let mut h_midpoint = Vec::with_capacity(partition.len());
        let mut h_midpoint_grads = Vec::with_capacity(partition.len());
        for item in partition.items() {
            bound_values.push(self.bound_value(&traj, item, method, &mut cache)?);
            let (h, grad) = self.h_at_midpoint(&traj, item)?;
            h_midpoint.push(h);
            h_midpoint_grads.push(grad);
        }
        let mut max_h_dense = Vec::with_capacity(self.spec.constraints.len());
        for index in 0..self.spec.constraints.len() {
            max_h_dense.push(self.dense_max_h(&traj, index, dense_grid)?);
        }
        Ok(PointAnalysis {
            cost,
            objective_grad,
            bound_values,
            h_midpoint,
            h_midpoint_grads,
            max_h_dense,
        })
    }
}

/// Presents one partition's approximation problem through the NLP callback
/// interface: objective `Phi(x(tf))`, one inequality row per subinterval.
pub struct Evaluator<'a> {
    problem: &'a CompiledProblem,
    partition: &'a Partition,
    method: BoundMethod,
    cache: TransformCache,
}

impl<'a> Evaluator<'a> {
    pub fn new(
        problem: &'a CompiledProblem,
        partition: &'a Partition,
        method: BoundMethod,
    ) -> Evaluator<'a> {
        Evaluator { problem, partition, method, cache: TransformCache::new() }
    }
}

fn callback_err(e: OdeError) -> NlpError {
    NlpError::Callback(e.to_string())
}

impl NlpCallbacks for Evaluator<'_> {
    fn n_vars(&self) -> usize {
        self.problem.spec().n_controls()
    }

    fn n_constraints(&self) -> usize {
        self.partition.len()
    }

    fn eval(&mut self, u: &[f64]) -> Result<PointEval, NlpError> {
        let traj = self.problem.integrate_values(u).map_err(callback_err)?;
        let objective = self.problem.objective_value(&traj).map_err(callback_err)?;
        let mut constraints = Vec::with_capacity(self.partition.len());
        for item in self.partition.items() {
            constraints.push(
                self.problem
                    .bound_value(&traj, item, self.method, &mut self.cache)
                    .map_err(callback_err)?,
            );
        }
        Ok(PointEval { objective, constraints })
    }

    fn eval_grad(&mut self, u: &[f64]) -> Result<GradEval, NlpError> {
        let traj = self.problem.integrate_with_sensitivities(u).map_err(callback_err)?;
        let objective = self.problem.objective_value(&traj).map_err(callback_err)?;
        let grad_objective = self.problem.objective_gradient(&traj).map_err(callback_err)?;
        let mut constraints = Vec::with_capacity(self.partition.len());
        let mut jacobian = Vec::with_capacity(self.partition.len());
        for item in self.partition.items() {
            let (value, grad) = self
                .problem
                .bound_value_grad(&traj, item, self.method, &mut self.cache)
                .map_err(callback_err)?;
            constraints.push(value);
            jacobian.push(grad);
        }
        Ok(GradEval { objective, grad_objective, constraints, jacobian })
    }
}
