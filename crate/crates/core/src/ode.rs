//! Adaptive Dormand-Prince 5(4) integration with dense output and forward
//! control sensitivities.
//!
//! Controls are piecewise constant on a fixed mesh; integration restarts at
//! every mesh breakpoint so no step straddles a control jump. Sensitivities
//! `S = dx/du` follow the variational equation `S' = (df/dx) S + df/du`,
//! where the direct `df/du` block feeds only the columns of the segment
//! currently active. The state and every sensitivity column are integrated
//! together inside one augmented vector with a shared error norm.

use crate::expr::{Bindings, EvalError, Expr, LieTable, Program, Var};
use crate::interval::Interval;

/// Piecewise-constant control parameterization: a strictly increasing time
/// mesh and the number of control channels held constant on each segment.
/// The flat decision vector stores segment-major channel values, i.e.
/// channel `c` on segment `m` lives at `m * n_channels + c`.
#[derive(Debug, Clone)]
pub struct ControlGrid {
    breakpoints: Vec<f64>,
    n_channels: usize,
}

impl ControlGrid {
    pub fn new(breakpoints: Vec<f64>, n_channels: usize) -> ControlGrid {
        assert!(breakpoints.len() >= 2, "need at least one segment");
        assert!(n_channels >= 1, "need at least one control channel");
        assert!(
            breakpoints.windows(2).all(|w| w[0] < w[1]),
            "breakpoints must be strictly increasing"
        );
        ControlGrid { breakpoints, n_channels }
    }

    pub fn uniform(t0: f64, tf: f64, segments: usize, n_channels: usize) -> ControlGrid {
        assert!(segments >= 1 && tf > t0);
        let mut breakpoints: Vec<f64> =
            (0..segments).map(|i| t0 + (tf - t0) * i as f64 / segments as f64).collect();
        breakpoints.push(tf);
        ControlGrid::new(breakpoints, n_channels)
    }

    pub fn n_segments(&self) -> usize {
        self.breakpoints.len() - 1
    }

    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    /// Length of the flat decision vector.
    pub fn n_controls(&self) -> usize {
        self.n_segments() * self.n_channels
    }

    pub fn t0(&self) -> f64 {
        self.breakpoints[0]
    }

    pub fn tf(&self) -> f64 {
        *self.breakpoints.last().unwrap()
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn segment_span(&self, segment: usize) -> Interval {
        Interval::new(self.breakpoints[segment], self.breakpoints[segment + 1])
    }

    /// Segment owning time `t`; breakpoints belong to the right segment
    /// except the final time, which belongs to the last.
    pub fn segment_of(&self, t: f64) -> usize {
        let n = self.n_segments();
        match self.breakpoints.binary_search_by(|b| b.partial_cmp(&t).unwrap()) {
            Ok(i) => i.min(n - 1),
            Err(i) => i.saturating_sub(1).min(n - 1),
        }
    }

    pub fn flat_index(&self, segment: usize, channel: usize) -> usize {
        debug_assert!(segment < self.n_segments() && channel < self.n_channels);
        segment * self.n_channels + channel
    }

    /// Channel values active on `segment`.
    pub fn segment_controls<'a>(&self, u_flat: &'a [f64], segment: usize) -> &'a [f64] {
        debug_assert_eq!(u_flat.len(), self.n_controls());
        let start = segment * self.n_channels;
        &u_flat[start..start + self.n_channels]
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OdeError {
    #[error("step size underflow at t = {t} (stiffness or blow-up)")]
    StepSizeUnderflow { t: f64 },
    #[error("step budget exhausted at t = {t}")]
    MaxStepsExceeded { t: f64 },
    #[error("time {t} outside the trajectory span")]
    TimeOutOfRange { t: f64 },
    #[error("trajectory was integrated without sensitivities")]
    MissingSensitivities,
    #[error("right-hand side evaluation failed: {0}")]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        // two orders below the driver's 1e-3 KKT tolerances, so integration
        // error never masquerades as constraint violation
        OdeOptions { rtol: 1e-8, atol: 1e-8, max_steps: 1_000_000 }
    }
}

impl OdeOptions {
    pub fn with_tol(tol: f64) -> OdeOptions {
        OdeOptions { rtol: tol, atol: tol, ..OdeOptions::default() }
    }
}

/// Dynamics compiled for repeated right-hand-side evaluation: one program
/// for plain state integration, one that also produces both Jacobians for
/// the variational equations.
#[derive(Debug)]
pub struct CompiledDynamics {
    n_x: usize,
    n_channels: usize,
    value: Program,
    with_jacobians: Program,
}

impl CompiledDynamics {
    pub fn new(f: &[Expr], n_x: usize, n_channels: usize) -> CompiledDynamics {
        assert_eq!(f.len(), n_x, "dynamics dimension mismatch");
        let mut batch: Vec<Expr> = f.to_vec();
        for fk in f {
            for k in 0..n_x {
                batch.push(fk.diff(Var::State(k)));
            }
        }
        for fk in f {
            for c in 0..n_channels {
                batch.push(fk.diff(Var::Control(c)));
            }
        }
        CompiledDynamics {
            n_x,
            n_channels,
            value: Program::compile(f),
            with_jacobians: Program::compile(&batch),
        }
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_channels(&self) -> usize {
        self.n_channels
    }
}

/// One accepted step with its quartic dense-output coefficients.
#[derive(Debug, Clone)]
struct DenseStep {
    t: f64,
    h: f64,
    cont: [Vec<f64>; 5],
}

impl DenseStep {
    fn eval_into(&self, theta: f64, out: &mut [f64]) {
        let s = theta;
        let s1 = 1.0 - theta;
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.cont[0][i]
                + s * (self.cont[1][i]
                    + s1 * (self.cont[2][i] + s * (self.cont[3][i] + s1 * self.cont[4][i])));
        }
    }
}

/// A solved trajectory: dense-output interpolants over `[t0, tf]`, the final
/// augmented state, and the control vector it was integrated under.
#[derive(Debug)]
pub struct Trajectory {
    n_x: usize,
    n_controls: usize,
    dim: usize,
    has_sens: bool,
    steps: Vec<DenseStep>,
    final_y: Vec<f64>,
    t0: f64,
    tf: f64,
    grid: ControlGrid,
    u: Vec<f64>,
    pub n_steps_accepted: usize,
    pub n_steps_rejected: usize,
}

impl Trajectory {
    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn tf(&self) -> f64 {
        self.tf
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn has_sensitivities(&self) -> bool {
        self.has_sens
    }

    pub fn grid(&self) -> &ControlGrid {
        &self.grid
    }

    pub fn controls(&self) -> &[f64] {
        &self.u
    }

    pub fn final_state(&self) -> &[f64] {
        &self.final_y[..self.n_x]
    }

    /// Final sensitivity matrix entry `dx_i(tf)/du_j`.
    pub fn final_sensitivity(&self, i: usize, j: usize) -> f64 {
        assert!(self.has_sens);
        self.final_y[self.n_x * (1 + j) + i]
    }

    fn locate(&self, t: f64) -> Result<(usize, f64), OdeError> {
        let slack = 1e-9 * (self.tf - self.t0).abs().max(1.0);
        if t < self.t0 - slack || t > self.tf + slack {
            return Err(OdeError::TimeOutOfRange { t });
        }
        let t = t.clamp(self.t0, self.tf);
        // first step whose [t, t+h] covers the query
        let idx = match self
            .steps
            .binary_search_by(|s| s.t.partial_cmp(&t).unwrap())
        {
            Ok(i) => i,
            Err(i) => i.saturating_sub(1),
        };
        let idx = idx.min(self.steps.len() - 1);
        let step = &self.steps[idx];
        Ok((idx, ((t - step.t) / step.h).clamp(0.0, 1.0)))
    }

    /// Interpolated state at `t` written into `out` (length `n_x`).
    pub fn state_into(&self, t: f64, out: &mut [f64]) -> Result<(), OdeError> {
        assert_eq!(out.len(), self.n_x);
        let (idx, theta) = self.locate(t)?;
        let step = &self.steps[idx];
        let s = theta;
        let s1 = 1.0 - theta;
        for (i, o) in out.iter_mut().enumerate() {
            *o = step.cont[0][i]
                + s * (step.cont[1][i]
                    + s1 * (step.cont[2][i] + s * (step.cont[3][i] + s1 * step.cont[4][i])));
        }
        Ok(())
    }

    pub fn state_at(&self, t: f64) -> Result<Vec<f64>, OdeError> {
        let mut out = vec![0.0; self.n_x];
        self.state_into(t, &mut out)?;
        Ok(out)
    }

    /// Interpolated full augmented vector (state + sensitivity columns).
    fn augmented_into(&self, t: f64, out: &mut [f64]) -> Result<(), OdeError> {
        assert_eq!(out.len(), self.dim);
        let (idx, theta) = self.locate(t)?;
        self.steps[idx].eval_into(theta, out);
        Ok(())
    }

    /// Sensitivity matrix at `t`: `out[j]` receives the column
    /// `dx(t)/du_j` (length `n_x`) for each flat control index `j`.
    pub fn sensitivity_into(&self, t: f64, out: &mut [Vec<f64>]) -> Result<(), OdeError> {
        if !self.has_sens {
            return Err(OdeError::MissingSensitivities);
        }
        assert_eq!(out.len(), self.n_controls);
        let mut aug = vec![0.0; self.dim];
        self.augmented_into(t, &mut aug)?;
        for (j, col) in out.iter_mut().enumerate() {
            assert_eq!(col.len(), self.n_x);
            col.copy_from_slice(&aug[self.n_x * (1 + j)..self.n_x * (2 + j)]);
        }
        Ok(())
    }

    /// Channel values of the control active at `t`.
    pub fn control_at(&self, t: f64) -> &[f64] {
        self.grid.segment_controls(&self.u, self.grid.segment_of(t))
    }
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 6] = [
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

struct Rhs<'a> {
    dynamics: &'a CompiledDynamics,
    grid: &'a ControlGrid,
    u: &'a [f64],
    with_sens: bool,
    scratch: Vec<f64>,
    outputs: Vec<f64>,
}

impl<'a> Rhs<'a> {
    fn new(
        dynamics: &'a CompiledDynamics,
        grid: &'a ControlGrid,
        u: &'a [f64],
        with_sens: bool,
    ) -> Rhs<'a> {
        let prog = if with_sens { &dynamics.with_jacobians } else { &dynamics.value };
        Rhs {
            dynamics,
            grid,
            u,
            with_sens,
            scratch: vec![0.0; prog.scratch_len()],
            outputs: vec![0.0; prog.n_outputs()],
        }
    }

    fn dim(&self) -> usize {
        if self.with_sens {
            self.dynamics.n_x * (1 + self.grid.n_controls())
        } else {
            self.dynamics.n_x
        }
    }

    fn eval(&mut self, segment: usize, t: f64, y: &[f64], dydt: &mut [f64]) -> Result<(), EvalError> {
        let n_x = self.dynamics.n_x;
        let n_c = self.dynamics.n_channels;
        let bindings = Bindings {
            x: &y[..n_x],
            u: self.grid.segment_controls(self.u, segment),
            t,
        };
        let prog = if self.with_sens { &self.dynamics.with_jacobians } else { &self.dynamics.value };
        prog.eval_into(&bindings, &mut self.scratch, &mut self.outputs)?;
        dydt[..n_x].copy_from_slice(&self.outputs[..n_x]);
        if self.with_sens {
            let jx = &self.outputs[n_x..n_x + n_x * n_x]; // row-major df_i/dx_k
            let ju = &self.outputs[n_x + n_x * n_x..]; // row-major df_i/du_c
            let n_u = self.grid.n_controls();
            for j in 0..n_u {
                let col_in = &y[n_x * (1 + j)..n_x * (2 + j)];
                let col_out = &mut dydt[n_x * (1 + j)..n_x * (2 + j)];
                for i in 0..n_x {
                    let mut acc = 0.0;
                    for k in 0..n_x {
                        acc += jx[i * n_x + k] * col_in[k];
                    }
                    col_out[i] = acc;
                }
                // direct control dependence only inside the owning segment
                if j / n_c == segment {
                    let c = j % n_c;
                    for i in 0..n_x {
                        col_out[i] += ju[i * n_c + c];
                    }
                }
            }
        }
        Ok(())
    }
}

/// Integrates the state ODE over the control grid's horizon.
pub fn integrate(
    dynamics: &CompiledDynamics,
    x0: &[f64],
    u: &[f64],
    grid: &ControlGrid,
    opts: &OdeOptions,
) -> Result<Trajectory, OdeError> {
    integrate_inner(dynamics, x0, u, grid, opts, false)
}

/// Integrates the state together with the forward sensitivities
/// `S(t) = dx(t)/du`, `S(t0) = 0`.
pub fn integrate_with_sensitivities(
    dynamics: &CompiledDynamics,
    x0: &[f64],
    u: &[f64],
    grid: &ControlGrid,
    opts: &OdeOptions,
) -> Result<Trajectory, OdeError> {
    integrate_inner(dynamics, x0, u, grid, opts, true)
}

fn integrate_inner(
    dynamics: &CompiledDynamics,
    x0: &[f64],
    u: &[f64],
    grid: &ControlGrid,
    opts: &OdeOptions,
    with_sens: bool,
) -> Result<Trajectory, OdeError> {
    assert_eq!(x0.len(), dynamics.n_x, "initial state dimension mismatch");
    assert_eq!(u.len(), grid.n_controls(), "control vector dimension mismatch");
    let mut rhs = Rhs::new(dynamics, grid, u, with_sens);
    let dim = rhs.dim();

    let mut y = vec![0.0; dim];
    y[..dynamics.n_x].copy_from_slice(x0);

    let mut steps = Vec::new();
    let mut accepted = 0usize;
    let mut rejected = 0usize;
    let mut budget = opts.max_steps;
    let mut h_carry: Option<f64> = None;

    let mut k: Vec<Vec<f64>> = (0..7).map(|_| vec![0.0; dim]).collect();
    let mut y_stage = vec![0.0; dim];
    let mut y_new = vec![0.0; dim];

    for segment in 0..grid.n_segments() {
        let span = grid.segment_span(segment);
        let mut t = span.lo();
        let t_end = span.hi();

        rhs.eval(segment, t, &y, &mut k[0])?;
        let mut h = match h_carry {
            Some(prev) => prev.min(span.width()),
            None => initial_step(&mut rhs, segment, t, &y, &k[0].clone(), span.width(), opts)?,
        };
        let mut just_rejected = false;

        while t < t_end {
            if budget == 0 {
                return Err(OdeError::MaxStepsExceeded { t });
            }
            budget -= 1;

            let h_min = 4.0 * f64::EPSILON * t.abs().max(t_end.abs()).max(1.0);
            if h < h_min {
                return Err(OdeError::StepSizeUnderflow { t });
            }
            let mut is_last = false;
            if t + h >= t_end {
                h = t_end - t;
                is_last = true;
            }

            // stages 2..7; k7 is the FSAL evaluation at (t + h, y_new)
            for stage in 1..7 {
                for i in 0..dim {
                    let mut acc = 0.0;
                    for (j, kj) in k.iter().enumerate().take(stage) {
                        let a = A[stage - 1][j];
                        if a != 0.0 {
                            acc += a * kj[i];
                        }
                    }
                    y_stage[i] = y[i] + h * acc;
                }
                if stage == 6 {
                    y_new.copy_from_slice(&y_stage);
                }
                let (head, tail) = k.split_at_mut(stage);
                let _ = head;
                rhs.eval(segment, t + C[stage] * h, &y_stage, &mut tail[0])?;
            }

            // embedded error estimate over the state components; the
            // sensitivity columns ride the accepted steps (standard
            // treatment of variational equations)
            let err_dim = dynamics.n_x;
            let mut err_sq = 0.0;
            for i in 0..err_dim {
                let mut e = 0.0;
                for (j, kj) in k.iter().enumerate() {
                    if E[j] != 0.0 {
                        e += E[j] * kj[i];
                    }
                }
                let sk = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
                let ratio = h * e / sk;
                err_sq += ratio * ratio;
            }
            let err = (err_sq / err_dim as f64).sqrt();

            if err <= 1.0 {
                // dense-output coefficients
                let mut cont: [Vec<f64>; 5] = [
                    vec![0.0; dim],
                    vec![0.0; dim],
                    vec![0.0; dim],
                    vec![0.0; dim],
                    vec![0.0; dim],
                ];
                for i in 0..dim {
                    let ydiff = y_new[i] - y[i];
                    let bspl = h * k[0][i] - ydiff;
                    cont[0][i] = y[i];
                    cont[1][i] = ydiff;
                    cont[2][i] = bspl;
                    cont[3][i] = ydiff - h * k[6][i] - bspl;
                    let mut acc = 0.0;
                    for (j, kj) in k.iter().enumerate() {
                        if D[j] != 0.0 {
                            acc += D[j] * kj[i];
                        }
                    }
                    cont[4][i] = h * acc;
                }
                steps.push(DenseStep { t, h, cont });
                accepted += 1;

                // land exactly on the segment end; accumulated rounding in
                // t would otherwise leave an unsteppable sliver
                t = if is_last { t_end } else { t + h };
                y.copy_from_slice(&y_new);
                k.swap(0, 6); // FSAL

                let facmax = if just_rejected { 1.0 } else { 10.0 };
                h *= (0.9 * err.powf(-0.2)).clamp(0.2, facmax);
                just_rejected = false;
            } else {
                rejected += 1;
                just_rejected = true;
                h *= (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
            }
        }
        h_carry = Some(h);
    }

    Ok(Trajectory {
        n_x: dynamics.n_x,
        n_controls: if with_sens { grid.n_controls() } else { 0 },
        dim,
        has_sens: with_sens,
        steps,
        final_y: y,
        t0: grid.t0(),
        tf: grid.tf(),
        grid: grid.clone(),
        u: u.to_vec(),
        n_steps_accepted: accepted,
        n_steps_rejected: rejected,
    })
}

/// Hairer-style starting step: balance the scaled norms of the state and
/// its derivative, then refine with one explicit Euler probe.
fn initial_step(
    rhs: &mut Rhs,
    segment: usize,
    t: f64,
    y: &[f64],
    f0: &[f64],
    span: f64,
    opts: &OdeOptions,
) -> Result<f64, OdeError> {
    let dim = y.len();
    let sk = |yi: f64| opts.atol + opts.rtol * yi.abs();
    let d0 = (y.iter().map(|&v| (v / sk(v)).powi(2)).sum::<f64>() / dim as f64).sqrt();
    let d1 = (f0
        .iter()
        .zip(y)
        .map(|(&f, &v)| (f / sk(v)).powi(2))
        .sum::<f64>()
        / dim as f64)
        .sqrt();
    let mut h = if d0 < 1e-10 || d1 < 1e-10 { 1e-6 } else { 0.01 * d0 / d1 };
    h = h.min(span);

    let mut y1 = vec![0.0; dim];
    for i in 0..dim {
        y1[i] = y[i] + h * f0[i];
    }
    let mut f1 = vec![0.0; dim];
    rhs.eval(segment, t + h, &y1, &mut f1)?;
    let d2 = (f1
        .iter()
        .zip(f0)
        .zip(y)
        .map(|((&a, &b), &v)| ((a - b) / sk(v)).powi(2))
        .sum::<f64>()
        / dim as f64)
        .sqrt()
        / h;

    let d_max = d1.max(d2);
    let h1 = if d_max <= 1e-15 {
        (h * 1e-3).max(1e-6)
    } else {
        (0.01 / d_max).powf(0.2)
    };
    Ok(h1.min(100.0 * h).min(span))
}

/// Lie-derivative table compiled for midpoint evaluation: the derivative
/// orders, then their state partials, then their control partials, all in
/// one program.
#[derive(Debug)]
pub struct CompiledLie {
    q: usize,
    n_x: usize,
    n_channels: usize,
    program: Program,
}

impl CompiledLie {
    pub fn new(table: &LieTable) -> CompiledLie {
        let q = table.orders.len();
        let n_x = table.dx.first().map_or(0, |row| row.len());
        let n_channels = table.du.first().map_or(0, |row| row.len());
        let mut batch = table.orders.clone();
        for row in &table.dx {
            batch.extend(row.iter().cloned());
        }
        for row in &table.du {
            batch.extend(row.iter().cloned());
        }
        CompiledLie { q, n_x, n_channels, program: Program::compile(&batch) }
    }

    pub fn q(&self) -> usize {
        self.q
    }

    fn eval_all(&self, traj: &Trajectory, c: f64) -> Result<Vec<f64>, OdeError> {
        let x = traj.state_at(c)?;
        let bindings = Bindings { x: &x, u: traj.control_at(c), t: c };
        let mut scratch = vec![0.0; self.program.scratch_len()];
        let mut out = vec![0.0; self.program.n_outputs()];
        self.program.eval_into(&bindings, &mut scratch, &mut out)?;
        Ok(out)
    }
}

/// Derivative vector `D_i = (L^i h)(x(c), u, c)` for `i = 0..q-1`. The
/// `1/i!` Taylor factors are not applied here; they live in the transform
/// matrix.
pub fn eval_d(traj: &Trajectory, lie: &CompiledLie, c: f64) -> Result<Vec<f64>, OdeError> {
    let out = lie.eval_all(traj, c)?;
    Ok(out[..lie.q].to_vec())
}

/// Jacobian of the derivative vector with respect to the flat controls:
/// row `i` is `(dL^i h/dx) S(c) + dL^i h/du`, the direct term applying only
/// to the segment owning `c`.
pub fn eval_grad_d(
    traj: &Trajectory,
    lie: &CompiledLie,
    c: f64,
) -> Result<Vec<Vec<f64>>, OdeError> {
    if !traj.has_sensitivities() {
        return Err(OdeError::MissingSensitivities);
    }
    let out = lie.eval_all(traj, c)?;
    let (q, n_x, n_c) = (lie.q, lie.n_x, lie.n_channels);
    let dx = &out[q..q + q * n_x];
    let du = &out[q + q * n_x..];

    let n_u = traj.grid.n_controls();
    let mut sens: Vec<Vec<f64>> = vec![vec![0.0; n_x]; n_u];
    traj.sensitivity_into(c, &mut sens)?;
    let segment = traj.grid.segment_of(c);

    let mut grad = vec![vec![0.0; n_u]; q];
    for i in 0..q {
        for j in 0..n_u {
            let mut acc = 0.0;
            for kx in 0..n_x {
                acc += dx[i * n_x + kx] * sens[j][kx];
            }
            if j / n_c == segment {
                acc += du[i * n_c + j % n_c];
            }
            grad[i][j] = acc;
        }
    }
    Ok(grad)
}
