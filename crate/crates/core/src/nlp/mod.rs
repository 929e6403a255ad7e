//! Sequential quadratic programming for the finite-dimensional
//! approximation problems.
//!
//! Dense SQP with a damped-BFGS Lagrangian Hessian, an l1 exact-penalty
//! line search, and a dual active-set QP subproblem solver. When the
//! linearized constraints are inconsistent the subproblem switches to an
//! elastic form with penalized nonnegative slacks; an iterate that
//! converges in elastic mode with residual slack is reported as an
//! infeasibility certificate carrying the minimized l1 violation.
//!
//! A feasible incumbent is never abandoned: once the iterate satisfies the
//! constraints, the line search rejects trial points that violate them
//! beyond `keep_feasible_tol`. The outer driver relies on this to keep
//! every iterate inside the true feasible region.

mod qp;

pub use qp::{solve_qp, QpError, QpSolution};

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NlpError {
    #[error("objective/constraint callback failed: {0}")]
    Callback(String),
    #[error("quadratic subproblem failed: {0}")]
    Subproblem(#[from] QpError),
    #[error("start point has inconsistent dimension")]
    Dimension,
}

/// Values at a point: objective and all inequality constraints
/// (`g_i(u) <= 0` feasible).
#[derive(Debug, Clone)]
pub struct PointEval {
    pub objective: f64,
    pub constraints: Vec<f64>,
}

/// Values plus first derivatives.
#[derive(Debug, Clone)]
pub struct GradEval {
    pub objective: f64,
    pub grad_objective: Vec<f64>,
    pub constraints: Vec<f64>,
    /// Row `i` is the gradient of constraint `i`.
    pub jacobian: Vec<Vec<f64>>,
}

/// Problem callbacks. Separate value-only evaluation keeps line searches
/// cheap when gradients are expensive (ODE sensitivities).
pub trait NlpCallbacks {
    fn n_vars(&self) -> usize;
    fn n_constraints(&self) -> usize;
    fn eval(&mut self, u: &[f64]) -> Result<PointEval, NlpError>;
    fn eval_grad(&mut self, u: &[f64]) -> Result<GradEval, NlpError>;
}

#[derive(Debug, Clone, Copy)]
pub struct NlpOptions {
    /// Infinity-norm stationarity tolerance.
    pub tol: f64,
    /// Constraint feasibility tolerance at reported optima.
    pub feas_tol: f64,
    pub max_iters: usize,
    /// Elastic slack penalty weight.
    pub elastic_penalty: f64,
    /// Converged elastic slack above this certifies infeasibility.
    pub infeas_threshold: f64,
    /// Once feasible to this tolerance, iterates stay feasible to it.
    pub keep_feasible_tol: f64,
}

impl Default for NlpOptions {
    fn default() -> Self {
        NlpOptions {
            tol: 1e-6,
            feas_tol: 1e-8,
            max_iters: 200,
            elastic_penalty: 1e6,
            infeas_threshold: 1e-6,
            keep_feasible_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NlpStatus {
    Optimal,
    Infeasible,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct NlpResult {
    pub status: NlpStatus,
    pub u: Vec<f64>,
    /// One multiplier per constraint; nonnegative at optima.
    pub lambda: Vec<f64>,
    /// Infinity-norm stationarity residual of the Lagrangian (with box
    /// contributions absorbed).
    pub kkt_residual: f64,
    pub constraint_values: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    /// l1 constraint violation at the final iterate; the certificate value
    /// when `status == Infeasible`.
    pub min_violation: f64,
}

/// KKT residual check for a candidate solution of the original problem.
///
/// Stationarity is the l2 norm of `grad_f + sum_m lambda_m grad_h_m` with
/// active box bounds absorbed: a positive residual component at the lower
/// bound (or negative at the upper) is carried by the bound's own
/// multiplier and projected out. Complementarity holds for multiplier `m`
/// iff `lambda_m h_m` lies in `[-lambda_m eps_act, 0]`.
pub struct KktCheck {
    pub stationarity: f64,
    pub complementarity: Vec<bool>,
}

#[allow(clippy::too_many_arguments)]
pub fn kkt_residuals(
    u: &[f64],
    lower: &[f64],
    upper: &[f64],
    objective_grad: &[f64],
    constraint_grads: &[Vec<f64>],
    lambda: &[f64],
    constraint_values: &[f64],
    eps_act: f64,
) -> KktCheck {
    assert_eq!(constraint_grads.len(), lambda.len());
    assert_eq!(constraint_values.len(), lambda.len());
    let n = u.len();
    let mut resid: Vec<f64> = objective_grad.to_vec();
    for (grad, &lam) in constraint_grads.iter().zip(lambda) {
        for (r, &g) in resid.iter_mut().zip(grad) {
            *r += lam * g;
        }
    }
    let bound_tol = 1e-9;
    for k in 0..n {
        let at_lower =
            lower[k].is_finite() && u[k] - lower[k] <= bound_tol * (1.0 + lower[k].abs());
        let at_upper =
            upper[k].is_finite() && upper[k] - u[k] <= bound_tol * (1.0 + upper[k].abs());
        if (at_lower && resid[k] > 0.0) || (at_upper && resid[k] < 0.0) {
            resid[k] = 0.0;
        }
    }
    let stationarity = resid.iter().map(|r| r * r).sum::<f64>().sqrt();
    let complementarity = lambda
        .iter()
        .zip(constraint_values)
        .map(|(&lam, &h)| {
            let prod = lam * h;
            prod >= -lam * eps_act && prod <= 0.0
        })
        .collect();
    KktCheck { stationarity, complementarity }
}

fn linf(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
}

fn violation_l1(g: &[f64]) -> f64 {
    g.iter().map(|&v| v.max(0.0)).sum()
}

fn violation_linf(g: &[f64]) -> f64 {
    g.iter().fold(0.0f64, |acc, &v| acc.max(v.max(0.0)))
}

/// The QP subproblem at the current iterate. Returns the step, the
/// constraint multipliers, the bound multiplier contribution to the
/// stationarity residual, and the linearized violation left by the step
/// (nonzero only in elastic mode).
struct StepInfo {
    d: Vec<f64>,
    lambda: Vec<f64>,
    stationarity: f64,
    elastic: bool,
    residual_violation: f64,
}

#[allow(clippy::too_many_arguments)]
fn solve_subproblem(
    b_mat: &DMatrix<f64>,
    ge: &GradEval,
    d_lo: &[f64],
    d_hi: &[f64],
    u: &[f64],
    lower: &[f64],
    upper: &[f64],
    opts: &NlpOptions,
) -> Result<StepInfo, NlpError> {
    let n = u.len();
    let m = ge.constraints.len();

    // plain subproblem: constraint rows then step-bound rows
    let bound_rows = box_rows(d_lo, d_hi);
    let n_rows = m + bound_rows.len();
    let mut ci = DMatrix::<f64>::zeros(n, n_rows);
    let mut ci0 = DVector::<f64>::zeros(n_rows);
    for i in 0..m {
        for k in 0..n {
            ci[(k, i)] = -ge.jacobian[i][k];
        }
        ci0[i] = -ge.constraints[i];
    }
    for (row, &(k, sign, offset)) in bound_rows.iter().enumerate() {
        ci[(k, m + row)] = sign;
        ci0[m + row] = offset;
    }
    let g0 = DVector::from_column_slice(&ge.grad_objective);

    match solve_qp(b_mat, &g0, &ci, &ci0) {
        Ok(sol) => {
            let lambda = sol.multipliers[..m].to_vec();
            let stationarity = plain_stationarity(ge, &lambda, u, lower, upper);
            Ok(StepInfo {
                d: sol.x.iter().cloned().collect(),
                lambda,
                stationarity,
                elastic: false,
                residual_violation: 0.0,
            })
        }
        Err(QpError::Infeasible) | Err(QpError::IterationLimit) | Err(QpError::Degenerate) => {
            elastic_subproblem(b_mat, ge, d_lo, d_hi, u, lower, upper, opts)
        }
        Err(e) => Err(NlpError::Subproblem(e)),
    }
}

/// Elastic subproblem: nonnegative slacks on every constraint row with an
/// l1 penalty. Always feasible, so it yields a usable step even when the
/// linearization is inconsistent.
#[allow(clippy::too_many_arguments)]
fn elastic_subproblem(
    b_mat: &DMatrix<f64>,
    ge: &GradEval,
    d_lo: &[f64],
    d_hi: &[f64],
    u: &[f64],
    lower: &[f64],
    upper: &[f64],
    opts: &NlpOptions,
) -> Result<StepInfo, NlpError> {
    let n = u.len();
    let m = ge.constraints.len();
    let dim = n + m;

    let mut g_big = DMatrix::<f64>::zeros(dim, dim);
    g_big.view_mut((0, 0), (n, n)).copy_from(b_mat);
    for i in 0..m {
        // unit curvature on the slack block keeps the Hessian SPD without
        // moving the minimizer: the slack constraints are active there
        g_big[(n + i, n + i)] = 1.0;
    }
    let mut g0 = DVector::<f64>::zeros(dim);
    for k in 0..n {
        g0[k] = ge.grad_objective[k];
    }
    for i in 0..m {
        g0[n + i] = opts.elastic_penalty;
    }

    let bound_rows = box_rows(d_lo, d_hi);
    let n_rows = 2 * m + bound_rows.len();
    let mut ci = DMatrix::<f64>::zeros(dim, n_rows);
    let mut ci0 = DVector::<f64>::zeros(n_rows);
    for i in 0..m {
        // -J_i d + s_i - g_i >= 0
        for k in 0..n {
            ci[(k, i)] = -ge.jacobian[i][k];
        }
        ci[(n + i, i)] = 1.0;
        ci0[i] = -ge.constraints[i];
        // s_i >= 0
        ci[(n + i, m + i)] = 1.0;
    }
    for (row, &(k, sign, offset)) in bound_rows.iter().enumerate() {
        ci[(k, 2 * m + row)] = sign;
        ci0[2 * m + row] = offset;
    }

    let sol = solve_qp(&g_big, &g0, &ci, &ci0)?;
    let d: Vec<f64> = (0..n).map(|k| sol.x[k]).collect();
    let slack_sum: f64 = (0..m).map(|i| sol.x[n + i].max(0.0)).sum();
    let lambda = sol.multipliers[..m].to_vec();
    let stationarity = plain_stationarity(ge, &lambda, u, lower, upper);
    Ok(StepInfo { d, lambda, stationarity, elastic: true, residual_violation: slack_sum })
}

/// Minimum-norm correction `dc` with `J_V dc ~ -g_V` over the rows violated
/// at a trial point, evaluated at the current iterate's Jacobian. Adjacent
/// subintervals of one constraint produce near-parallel rows, so the Gram
/// system is Tikhonov-regularized; with more violated rows than variables
/// the correction degrades gracefully to regularized least squares.
fn restoration_step(
    trial_constraints: &[f64],
    jacobian: &[Vec<f64>],
    opts: &NlpOptions,
) -> Option<Vec<f64>> {
    let violated: Vec<usize> = trial_constraints
        .iter()
        .enumerate()
        .filter(|(_, &g)| g > opts.feas_tol)
        .map(|(i, _)| i)
        .collect();
    if violated.is_empty() {
        return None;
    }
    let n = jacobian.first()?.len();
    let k = violated.len();
    let j_v = DMatrix::from_fn(k, n, |row, col| jacobian[violated[row]][col]);
    let rhs = DVector::from_fn(k, |row, _| -trial_constraints[violated[row]]);
    let gram = &j_v * j_v.transpose();
    let reg = 1e-10 * (1.0 + gram.trace() / k as f64);
    let y = (gram + DMatrix::identity(k, k) * reg).cholesky()?.solve(&rhs);
    let dc = j_v.transpose() * y;
    if !dc.iter().all(|v| v.is_finite()) {
        return None;
    }
    Some(dc.iter().cloned().collect())
}

/// Step bounds encoded as inequality rows; only finite bounds produce
/// rows. Each entry is `(variable, sign, offset)` meaning
/// `sign * d_k + offset >= 0`.
fn box_rows(d_lo: &[f64], d_hi: &[f64]) -> Vec<(usize, f64, f64)> {
    let mut rows = Vec::new();
    for k in 0..d_lo.len() {
        if d_lo[k].is_finite() {
            rows.push((k, 1.0, -d_lo[k]));
        }
        if d_hi[k].is_finite() {
            rows.push((k, -1.0, d_hi[k]));
        }
    }
    rows
}

/// Infinity-norm Lagrangian stationarity at the current iterate with box
/// contributions projected out.
fn plain_stationarity(
    ge: &GradEval,
    lambda: &[f64],
    u: &[f64],
    lower: &[f64],
    upper: &[f64],
) -> f64 {
    let n = u.len();
    let mut resid = ge.grad_objective.clone();
    for (row, &lam) in ge.jacobian.iter().zip(lambda) {
        if lam != 0.0 {
            for (r, &g) in resid.iter_mut().zip(row) {
                *r += lam * g;
            }
        }
    }
    let bound_tol = 1e-9;
    for k in 0..n {
        let at_lower =
            lower[k].is_finite() && u[k] - lower[k] <= bound_tol * (1.0 + lower[k].abs());
        let at_upper =
            upper[k].is_finite() && upper[k] - u[k] <= bound_tol * (1.0 + upper[k].abs());
        if (at_lower && resid[k] > 0.0) || (at_upper && resid[k] < 0.0) {
            resid[k] = 0.0;
        }
    }
    linf(&resid)
}

/// Solves `min f(u) s.t. g(u) <= 0, lower <= u <= upper` from `start`.
pub fn solve(
    cb: &mut dyn NlpCallbacks,
    lower: &[f64],
    upper: &[f64],
    start: &[f64],
    opts: &NlpOptions,
) -> Result<NlpResult, NlpError> {
    let n = cb.n_vars();
    let m = cb.n_constraints();
    if lower.len() != n || upper.len() != n || start.len() != n {
        return Err(NlpError::Dimension);
    }

    let mut u: Vec<f64> = start
        .iter()
        .zip(lower.iter().zip(upper))
        .map(|(&v, (&lo, &hi))| v.clamp(lo, hi))
        .collect();

    let mut b_mat = DMatrix::<f64>::identity(n, n);
    let mut b_scaled = false;
    let mut mu = 10.0f64;
    let mut ge = cb.eval_grad(&u)?;
    let mut lambda = vec![0.0; m];
    let mut kkt = f64::INFINITY;
    let mut elastic_stall = 0usize;
    let mut ls_failures = 0usize;

    // trust region on the step, intersected with the variable box; the
    // quasi-Newton model is only trusted at the length it has earned
    let scale = lower
        .iter()
        .chain(upper.iter())
        .filter(|v| v.is_finite())
        .fold(1.0f64, |acc, v| acc.max(v.abs()));
    let tr_floor = 1e-10 * scale;
    let tr_max = 1e3 * scale;
    let mut tr = scale;

    for iter in 0..opts.max_iters {
        let d_lo: Vec<f64> = lower.iter().zip(&u).map(|(&lo, &v)| (lo - v).max(-tr)).collect();
        let d_hi: Vec<f64> = upper.iter().zip(&u).map(|(&hi, &v)| (hi - v).min(tr)).collect();
        let step = solve_subproblem(&b_mat, &ge, &d_lo, &d_hi, &u, lower, upper, opts)?;
        lambda = step.lambda.clone();
        kkt = step.stationarity;
        let viol_inf = violation_linf(&ge.constraints);
        let viol_l1 = violation_l1(&ge.constraints);

        // converged?
        if kkt <= opts.tol && viol_inf <= opts.feas_tol {
            return Ok(finish(NlpStatus::Optimal, u, lambda, kkt, ge, iter));
        }

        // infeasibility certificate: elastic mode, negligible step, and the
        // minimized linearized violation still above threshold
        let step_norm = linf(&step.d);
        if step.elastic
            && step_norm <= 1e-9 * (1.0 + linf(&u))
            && tr >= 1e-6 * scale
            && step.residual_violation > opts.infeas_threshold
        {
            let mut res = finish(NlpStatus::Infeasible, u, lambda, kkt, ge, iter);
            res.min_violation = viol_l1;
            return Ok(res);
        }

        // exact-penalty weight must dominate the multipliers
        let lam_max = linf(&lambda);
        if mu < 2.0 * lam_max + 1.0 {
            mu = 2.0 * lam_max + 10.0;
        }
        if step.elastic {
            mu = mu.max(opts.elastic_penalty);
        }

        let merit = |pe: &PointEval| pe.objective + mu * violation_l1(&pe.constraints);
        let merit0 = ge.objective + mu * viol_l1;
        // model reduction of the l1 merit along d
        let grad_dot_d: f64 = ge.grad_objective.iter().zip(&step.d).map(|(g, d)| g * d).sum();
        let descent = grad_dot_d - mu * (viol_l1 - step.residual_violation);

        let incumbent_feasible = viol_inf <= opts.keep_feasible_tol;
        let acceptable = |pe: &PointEval, alpha: f64| {
            let armijo = merit(pe) <= merit0 + 1e-4 * alpha * descent;
            let keeps_feasible =
                !incumbent_feasible || violation_linf(&pe.constraints) <= opts.keep_feasible_tol;
            armijo && keeps_feasible
        };
        let clamp_step = |alpha: f64, d: &[f64], base: &[f64]| -> Vec<f64> {
            base.iter()
                .zip(d)
                .zip(lower.iter().zip(upper))
                .map(|((&v, &dk), (&lo, &hi))| (v + alpha * dk).clamp(lo, hi))
                .collect()
        };

        let mut alpha = 1.0f64;
        let mut accepted = None;
        for attempt in 0..25 {
            let trial = clamp_step(alpha, &step.d, &u);
            let pe = cb.eval(&trial)?;
            if acceptable(&pe, alpha) {
                accepted = Some((trial, pe));
                break;
            }
            // second-order corrections: when the full step fails because
            // the constraints curve away from their linearization, restore
            // the violated rows with least-squares corrections instead of
            // crawling along the boundary with shrinking steps; each round
            // cuts the violation roughly quadratically
            if attempt == 0 {
                let mut d_corrected = step.d.clone();
                let mut last_viol = violation_linf(&pe.constraints);
                let mut soc_pe = pe;
                for _ in 0..3 {
                    let Some(correction) =
                        restoration_step(&soc_pe.constraints, &ge.jacobian, opts)
                    else {
                        break;
                    };
                    for (d, c) in d_corrected.iter_mut().zip(&correction) {
                        *d += c;
                    }
                    let trial = clamp_step(1.0, &d_corrected, &u);
                    let pe = cb.eval(&trial)?;
                    if acceptable(&pe, 1.0) {
                        accepted = Some((trial, pe));
                        break;
                    }
                    let viol = violation_linf(&pe.constraints);
                    if !(viol < 0.5 * last_viol) {
                        break; // not a curvature rejection; fall back
                    }
                    last_viol = viol;
                    soc_pe = pe;
                }
                if accepted.is_some() {
                    break;
                }
            }
            alpha *= 0.5;
        }

        if std::env::var_os("PATHBOUND_NLP_TRACE").is_some() {
            eprintln!(
                "major {iter}: kkt={kkt:.3e} viol={viol_inf:.3e} f={:.8} |d|={:.3e} alpha={} elastic={} mu={mu:.1e}",
                ge.objective,
                step_norm,
                accepted.as_ref().map(|_| alpha).unwrap_or(f64::NAN),
                step.elastic
            );
        }
        let Some((u_new, _pe_new)) = accepted else {
            // a shorter trusted step sometimes survives where the full one
            // failed, but a few consecutive dead line searches mean the
            // model is not the problem (nonsmooth kink, exhausted progress)
            ls_failures += 1;
            if tr > tr_floor && ls_failures < 3 {
                tr = (0.25 * tr).max(tr_floor);
                continue;
            }
            // no usable step at the smallest trusted length: report what
            // the iterate supports
            if step.elastic && viol_l1 > opts.infeas_threshold {
                let mut res = finish(NlpStatus::Infeasible, u, lambda, kkt, ge, iter);
                res.min_violation = viol_l1;
                return Ok(res);
            }
            let status = if viol_inf <= opts.feas_tol && kkt <= 100.0 * opts.tol {
                NlpStatus::Optimal
            } else {
                NlpStatus::IterationLimit
            };
            return Ok(finish(status, u, lambda, kkt, ge, iter));
        };

        ls_failures = 0;
        // adapt the trusted step length to what the line search accepted
        let step_inf = linf(&step.d);
        if alpha >= 0.9 {
            if step_inf >= 0.9 * tr {
                tr = (2.0 * tr).min(tr_max);
            }
        } else if alpha <= 0.25 {
            tr = (2.0 * alpha * step_inf).max(tr_floor).min(tr);
        }

        // track elastic stalls (violation not improving) as a secondary
        // infeasibility signal
        if step.elastic {
            elastic_stall += 1;
        } else {
            elastic_stall = 0;
        }

        let ge_new = cb.eval_grad(&u_new)?;

        // damped BFGS on the Lagrangian gradient difference
        let s = DVector::from_fn(n, |k, _| u_new[k] - u[k]);
        if s.amax() > 1e-14 {
            let grad_l = |g: &GradEval| {
                let mut v = DVector::from_column_slice(&g.grad_objective);
                for (row, &lam) in g.jacobian.iter().zip(&lambda) {
                    if lam != 0.0 {
                        for k in 0..n {
                            v[k] += lam * row[k];
                        }
                    }
                }
                v
            };
            let y = grad_l(&ge_new) - grad_l(&ge);
            // scale the initial curvature to the first measured pair;
            // a plain identity start costs dozens of extra iterations
            if !b_scaled {
                let s_y = s.dot(&y);
                if s_y > 1e-12 {
                    let gamma = (y.dot(&y) / s_y).clamp(1e-3, 1e6);
                    b_mat = DMatrix::identity(n, n) * gamma;
                }
                b_scaled = true;
            }
            let bs = &b_mat * &s;
            let s_bs = s.dot(&bs);
            let s_y = s.dot(&y);
            if s_bs > 1e-16 {
                let theta = if s_y >= 0.2 * s_bs {
                    1.0
                } else {
                    0.8 * s_bs / (s_bs - s_y)
                };
                let y_bar = &y * theta + &bs * (1.0 - theta);
                let s_ybar = s.dot(&y_bar);
                if s_ybar > 1e-12 * s.norm() * y_bar.norm() {
                    b_mat += &y_bar * y_bar.transpose() / s_ybar - &bs * bs.transpose() / s_bs;
                }
            }
        }

        u = u_new;
        ge = ge_new;

        if elastic_stall > 20 && violation_l1(&ge.constraints) > opts.infeas_threshold {
            let mut res = finish(NlpStatus::Infeasible, u, lambda, kkt, ge, iter);
            res.min_violation = violation_l1(&res.constraint_values);
            return Ok(res);
        }
    }

    Ok(finish(NlpStatus::IterationLimit, u, lambda, kkt, ge, opts.max_iters))
}

fn finish(
    status: NlpStatus,
    u: Vec<f64>,
    lambda: Vec<f64>,
    kkt: f64,
    ge: GradEval,
    iterations: usize,
) -> NlpResult {
    let min_violation = violation_l1(&ge.constraints);
    NlpResult {
        status,
        u,
        lambda,
        kkt_residual: kkt,
        constraint_values: ge.constraints,
        objective: ge.objective,
        iterations,
        min_violation,
    }
}

/// Convenience wrapper implementing [`NlpCallbacks`] from closures; used by
/// tests and small analytic problems.
pub struct FnProblem<F, G>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
    G: FnMut(&[f64]) -> (Vec<f64>, Vec<Vec<f64>>),
{
    pub n: usize,
    pub m: usize,
    /// objective value + constraint values
    pub values: F,
    /// objective gradient + constraint Jacobian rows
    pub grads: G,
}

impl<F, G> NlpCallbacks for FnProblem<F, G>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
    G: FnMut(&[f64]) -> (Vec<f64>, Vec<Vec<f64>>),
{
    fn n_vars(&self) -> usize {
        self.n
    }

    fn n_constraints(&self) -> usize {
        self.m
    }

    fn eval(&mut self, u: &[f64]) -> Result<PointEval, NlpError> {
        let (objective, constraints) = (self.values)(u);
        Ok(PointEval { objective, constraints })
    }

    fn eval_grad(&mut self, u: &[f64]) -> Result<GradEval, NlpError> {
        let (objective, constraints) = (self.values)(u);
        let (grad_objective, jacobian) = (self.grads)(u);
        Ok(GradEval { objective, grad_objective, constraints, jacobian })
    }
}
