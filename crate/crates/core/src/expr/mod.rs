//! Immutable expression DAGs over states, controls, and time.
//!
//! Expressions are parsed once per problem load and then reused: numeric
//! evaluation, natural interval extension, symbolic partial derivatives, and
//! Lie derivatives along an ODE vector field all walk the same shared nodes.
//! Hot loops (the ODE right-hand side) go through [`Program`], a flat
//! compiled form that evaluates many expressions at once with common
//! subexpressions computed a single time.
//!
//! Grammar: reals, `x1..xn`, `u1..un`, `t`, `+ - * / ^`, parentheses,
//! `sin`/`cos`/`exp`/`ln`, unary minus. Exponents are restricted to
//! nonnegative integer literals so interval powers stay tight.

mod compile;
mod parse;

pub use compile::Program;
pub use parse::{parse, ParseError};

use crate::interval::Interval;
use std::fmt;
use std::sync::Arc;

/// A differentiable variable: a state component, a control channel, or time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    State(usize),
    Control(usize),
    Time,
}

#[derive(Debug)]
pub(crate) enum Node {
    Const(f64),
    State(usize),
    Control(usize),
    Time,
    Neg(Expr),
    Add(Expr, Expr),
    Sub(Expr, Expr),
    Mul(Expr, Expr),
    Div(Expr, Expr),
    PowInt(Expr, u32),
    Sin(Expr),
    Cos(Expr),
    Exp(Expr),
    Ln(Expr),
}

/// An immutable expression; clones share structure.
#[derive(Debug, Clone)]
pub struct Expr(Arc<Node>);

/// Point bindings for evaluation: state vector, control vector, time.
#[derive(Debug, Clone, Copy)]
pub struct Bindings<'a> {
    pub x: &'a [f64],
    pub u: &'a [f64],
    pub t: f64,
}

/// Box bindings for natural interval extension.
#[derive(Debug, Clone, Copy)]
pub struct IntervalBindings<'a> {
    pub x: &'a [Interval],
    pub u: &'a [Interval],
    pub t: Interval,
}

/// Domain failure during evaluation. Never silently produces NaN.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("ln of non-positive value {0}")]
    LnDomain(f64),
    #[error("division by zero")]
    DivByZero,
    #[error("ln of interval {0} touching zero or below")]
    LnIntervalDomain(Interval),
    #[error("division by interval {0} containing zero")]
    DivIntervalDomain(Interval),
}

impl Expr {
    pub fn constant(value: f64) -> Expr {
        Expr(Arc::new(Node::Const(value)))
    }

    /// Zero-based state variable (source syntax `x1` is index 0).
    pub fn state(index: usize) -> Expr {
        Expr(Arc::new(Node::State(index)))
    }

    /// Zero-based control channel (source syntax `u1` is index 0).
    pub fn control(index: usize) -> Expr {
        Expr(Arc::new(Node::Control(index)))
    }

    pub fn time() -> Expr {
        Expr(Arc::new(Node::Time))
    }

    pub fn var(v: Var) -> Expr {
        match v {
            Var::State(k) => Expr::state(k),
            Var::Control(k) => Expr::control(k),
            Var::Time => Expr::time(),
        }
    }

    fn as_const(&self) -> Option<f64> {
        match *self.0 {
            Node::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    // Constructors fold constants and drop additive/multiplicative
    // identities; anything heavier is out of scope.

    pub fn add(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::constant(x + y),
            (Some(0.0), _) => b,
            (_, Some(0.0)) => a,
            _ => Expr(Arc::new(Node::Add(a, b))),
        }
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::constant(x - y),
            (_, Some(0.0)) => a,
            (Some(0.0), _) => Expr::neg(b),
            _ => Expr(Arc::new(Node::Sub(a, b))),
        }
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::constant(x * y),
            (Some(0.0), _) | (_, Some(0.0)) => Expr::constant(0.0),
            (Some(1.0), _) => b,
            (_, Some(1.0)) => a,
            _ => Expr(Arc::new(Node::Mul(a, b))),
        }
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) if y != 0.0 => Expr::constant(x / y),
            (Some(0.0), _) => Expr::constant(0.0),
            (_, Some(1.0)) => a,
            _ => Expr(Arc::new(Node::Div(a, b))),
        }
    }

    pub fn neg(a: Expr) -> Expr {
        match &*a.0 {
            Node::Const(c) => Expr::constant(-c),
            Node::Neg(inner) => inner.clone(),
            _ => Expr(Arc::new(Node::Neg(a))),
        }
    }

    pub fn pow_int(a: Expr, n: u32) -> Expr {
        match n {
            0 => Expr::constant(1.0),
            1 => a,
            _ => match a.as_const() {
                Some(c) => Expr::constant(c.powi(n as i32)),
                None => Expr(Arc::new(Node::PowInt(a, n))),
            },
        }
    }

    pub fn sin(a: Expr) -> Expr {
        match a.as_const() {
            Some(c) => Expr::constant(c.sin()),
            None => Expr(Arc::new(Node::Sin(a))),
        }
    }

    pub fn cos(a: Expr) -> Expr {
        match a.as_const() {
            Some(c) => Expr::constant(c.cos()),
            None => Expr(Arc::new(Node::Cos(a))),
        }
    }

    pub fn exp(a: Expr) -> Expr {
        match a.as_const() {
            Some(c) => Expr::constant(c.exp()),
            None => Expr(Arc::new(Node::Exp(a))),
        }
    }

    pub fn ln(a: Expr) -> Expr {
        match a.as_const() {
            // fold only where the domain is valid
            Some(c) if c > 0.0 => Expr::constant(c.ln()),
            _ => Expr(Arc::new(Node::Ln(a))),
        }
    }

    /// IEEE-double evaluation at a point.
    pub fn eval(&self, b: &Bindings) -> Result<f64, EvalError> {
        match &*self.0 {
            Node::Const(c) => Ok(*c),
            Node::State(k) => Ok(b.x[*k]),
            Node::Control(k) => Ok(b.u[*k]),
            Node::Time => Ok(b.t),
            Node::Neg(e) => Ok(-e.eval(b)?),
            Node::Add(l, r) => Ok(l.eval(b)? + r.eval(b)?),
            Node::Sub(l, r) => Ok(l.eval(b)? - r.eval(b)?),
            Node::Mul(l, r) => Ok(l.eval(b)? * r.eval(b)?),
            Node::Div(l, r) => {
                let denom = r.eval(b)?;
                if denom == 0.0 {
                    return Err(EvalError::DivByZero);
                }
                Ok(l.eval(b)? / denom)
            }
            Node::PowInt(e, n) => Ok(e.eval(b)?.powi(*n as i32)),
            Node::Sin(e) => Ok(e.eval(b)?.sin()),
            Node::Cos(e) => Ok(e.eval(b)?.cos()),
            Node::Exp(e) => Ok(e.eval(b)?.exp()),
            Node::Ln(e) => {
                let v = e.eval(b)?;
                if v <= 0.0 {
                    return Err(EvalError::LnDomain(v));
                }
                Ok(v.ln())
            }
        }
    }

    /// Natural interval extension: the result contains the true range of the
    /// expression over the box. Subject to the dependency effect by design.
    pub fn eval_interval(&self, b: &IntervalBindings) -> Result<Interval, EvalError> {
        match &*self.0 {
            Node::Const(c) => Ok(Interval::point(*c)),
            Node::State(k) => Ok(b.x[*k]),
            Node::Control(k) => Ok(b.u[*k]),
            Node::Time => Ok(b.t),
            Node::Neg(e) => Ok(-e.eval_interval(b)?),
            Node::Add(l, r) => Ok(l.eval_interval(b)? + r.eval_interval(b)?),
            Node::Sub(l, r) => Ok(l.eval_interval(b)? - r.eval_interval(b)?),
            Node::Mul(l, r) => Ok(l.eval_interval(b)? * r.eval_interval(b)?),
            Node::Div(l, r) => {
                let denom = r.eval_interval(b)?;
                if denom.lo() <= 0.0 && denom.hi() >= 0.0 {
                    return Err(EvalError::DivIntervalDomain(denom));
                }
                let num = l.eval_interval(b)?;
                let quotients = [
                    num.lo() / denom.lo(),
                    num.lo() / denom.hi(),
                    num.hi() / denom.lo(),
                    num.hi() / denom.hi(),
                ];
                let lo = quotients.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = quotients.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                Ok(Interval::new(lo, hi))
            }
            Node::PowInt(e, n) => Ok(e.eval_interval(b)?.pow_int(*n)),
            Node::Sin(e) => Ok(sin_interval(e.eval_interval(b)?)),
            Node::Cos(e) => Ok(cos_interval(e.eval_interval(b)?)),
            Node::Exp(e) => {
                let v = e.eval_interval(b)?;
                Ok(Interval::new(v.lo().exp(), v.hi().exp()))
            }
            Node::Ln(e) => {
                let v = e.eval_interval(b)?;
                if v.lo() <= 0.0 {
                    return Err(EvalError::LnIntervalDomain(v));
                }
                Ok(Interval::new(v.lo().ln(), v.hi().ln()))
            }
        }
    }

    /// Symbolic partial derivative with respect to `var`.
    pub fn diff(&self, var: Var) -> Expr {
        match &*self.0 {
            Node::Const(_) => Expr::constant(0.0),
            Node::State(k) => Expr::constant(if var == Var::State(*k) { 1.0 } else { 0.0 }),
            Node::Control(k) => Expr::constant(if var == Var::Control(*k) { 1.0 } else { 0.0 }),
            Node::Time => Expr::constant(if var == Var::Time { 1.0 } else { 0.0 }),
            Node::Neg(e) => Expr::neg(e.diff(var)),
            Node::Add(l, r) => Expr::add(l.diff(var), r.diff(var)),
            Node::Sub(l, r) => Expr::sub(l.diff(var), r.diff(var)),
            Node::Mul(l, r) => Expr::add(
                Expr::mul(l.diff(var), r.clone()),
                Expr::mul(l.clone(), r.diff(var)),
            ),
            Node::Div(l, r) => Expr::div(
                Expr::sub(
                    Expr::mul(l.diff(var), r.clone()),
                    Expr::mul(l.clone(), r.diff(var)),
                ),
                Expr::pow_int(r.clone(), 2),
            ),
            Node::PowInt(e, n) => Expr::mul(
                Expr::mul(Expr::constant(*n as f64), Expr::pow_int(e.clone(), n - 1)),
                e.diff(var),
            ),
            Node::Sin(e) => Expr::mul(Expr::cos(e.clone()), e.diff(var)),
            Node::Cos(e) => Expr::neg(Expr::mul(Expr::sin(e.clone()), e.diff(var))),
            Node::Exp(e) => Expr::mul(Expr::exp(e.clone()), e.diff(var)),
            Node::Ln(e) => Expr::div(e.diff(var), e.clone()),
        }
    }

    pub fn references_control(&self) -> bool {
        self.any_node(&|n| matches!(n, Node::Control(_)))
    }

    pub fn references_time(&self) -> bool {
        self.any_node(&|n| matches!(n, Node::Time))
    }

    fn any_node(&self, pred: &impl Fn(&Node) -> bool) -> bool {
        if pred(&self.0) {
            return true;
        }
        match &*self.0 {
            Node::Const(_) | Node::State(_) | Node::Control(_) | Node::Time => false,
            Node::Neg(a) | Node::PowInt(a, _) | Node::Sin(a) | Node::Cos(a) | Node::Exp(a)
            | Node::Ln(a) => a.any_node(pred),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                a.any_node(pred) || b.any_node(pred)
            }
        }
    }

    pub(crate) fn node(&self) -> &Node {
        &self.0
    }

    pub(crate) fn node_ptr(&self) -> *const Node {
        Arc::as_ptr(&self.0)
    }
}

/// `order`-fold total time derivative of `h` along `x' = f`, with the
/// controls held constant in time (piecewise-constant parameterization).
///
/// One application maps `g` to `sum_k (dg/dx_k) f_k + dg/dt`; order 0
/// returns `h` unchanged.
pub fn lie_derivative(h: &Expr, f: &[Expr], order: usize) -> Expr {
    let mut g = h.clone();
    for _ in 0..order {
        let mut acc = g.diff(Var::Time);
        for (k, fk) in f.iter().enumerate() {
            acc = Expr::add(acc, Expr::mul(g.diff(Var::State(k)), fk.clone()));
        }
        g = acc;
    }
    g
}

/// Table of Lie derivatives `L^0 h .. L^{q-1} h` together with their state
/// and control partials, compiled for repeated midpoint evaluation.
#[derive(Debug)]
pub struct LieTable {
    pub orders: Vec<Expr>,
    pub dx: Vec<Vec<Expr>>,
    pub du: Vec<Vec<Expr>>,
}

impl LieTable {
    pub fn build(h: &Expr, f: &[Expr], q: usize, n_x: usize, n_u: usize) -> LieTable {
        let mut orders = Vec::with_capacity(q);
        let mut g = h.clone();
        for i in 0..q {
            if i > 0 {
                g = lie_derivative(&g, f, 1);
            }
            orders.push(g.clone());
        }
        let dx = orders
            .iter()
            .map(|e| (0..n_x).map(|k| e.diff(Var::State(k))).collect())
            .collect();
        let du = orders
            .iter()
            .map(|e| (0..n_u).map(|k| e.diff(Var::Control(k))).collect())
            .collect();
        LieTable { orders, dx, du }
    }
}

fn sin_interval(v: Interval) -> Interval {
    range_of_periodic(v, f64::sin, std::f64::consts::FRAC_PI_2, -std::f64::consts::FRAC_PI_2)
}

fn cos_interval(v: Interval) -> Interval {
    range_of_periodic(v, f64::cos, 0.0, std::f64::consts::PI)
}

/// Range of a 2π-periodic wave with maxima at `max_at + 2πk` and minima at
/// `min_at + 2πk`, endpoints otherwise.
fn range_of_periodic(v: Interval, f: fn(f64) -> f64, max_at: f64, min_at: f64) -> Interval {
    const TWO_PI: f64 = 2.0 * std::f64::consts::PI;
    if v.width() >= TWO_PI {
        return Interval::new(-1.0, 1.0);
    }
    let (fa, fb) = (f(v.lo()), f(v.hi()));
    let mut lo = fa.min(fb);
    let mut hi = fa.max(fb);
    if contains_grid_point(v, max_at, TWO_PI) {
        hi = 1.0;
    }
    if contains_grid_point(v, min_at, TWO_PI) {
        lo = -1.0;
    }
    Interval::new(lo, hi)
}

fn contains_grid_point(v: Interval, offset: f64, period: f64) -> bool {
    ((v.lo() - offset) / period).ceil() <= ((v.hi() - offset) / period).floor()
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &*self.0 {
            Node::Const(c) => write!(f, "{c}"),
            Node::State(k) => write!(f, "x{}", k + 1),
            Node::Control(k) => write!(f, "u{}", k + 1),
            Node::Time => write!(f, "t"),
            Node::Neg(e) => write!(f, "-({e})"),
            Node::Add(l, r) => write!(f, "({l} + {r})"),
            Node::Sub(l, r) => write!(f, "({l} - {r})"),
            Node::Mul(l, r) => write!(f, "({l} * {r})"),
            Node::Div(l, r) => write!(f, "({l} / {r})"),
            Node::PowInt(e, n) => write!(f, "({e})^{n}"),
            Node::Sin(e) => write!(f, "sin({e})"),
            Node::Cos(e) => write!(f, "cos({e})"),
            Node::Exp(e) => write!(f, "exp({e})"),
            Node::Ln(e) => write!(f, "ln({e})"),
        }
    }
}
