//! Dynamic optimization with path constraints enforced over the whole
//! continuous horizon, not just at discretization nodes.
//!
//! The library replaces each path constraint on a time subinterval by a
//! smooth conservative upper bound: a Taylor expansion in time whose
//! polynomial part is enclosed through its Bernstein coefficients and
//! smoothed with log-sum-exp, plus a rigorous remainder envelope. Every
//! point that satisfies the bounds satisfies the original constraints, so
//! every solver iterate is feasible for the original problem. An adaptive
//! driver refines the subinterval partition until the bound solution
//! satisfies the KKT conditions of the original problem within tolerance.
//! A Taylor-model variant that encloses the polynomial part with plain
//! interval arithmetic is included as a comparison baseline.
//!
//! Module map:
//!
//! - [`interval`]: closed-interval arithmetic (no directed rounding).
//! - [`expr`]: expression parsing, differentiation, Lie derivatives,
//!   numeric and interval evaluation, compiled batch evaluation.
//! - [`bernstein`]: power-to-Bernstein conversion, the derivative-to-
//!   coefficient transform matrix, convex-hull range enclosure.
//! - [`bound`]: the smooth upper bound, its gradient, the interval
//!   baseline, and overestimation diagnostics.
//! - [`ode`]: adaptive Dormand-Prince integration with dense output and
//!   forward control sensitivities.
//! - [`nlp`]: dense SQP solver with BFGS curvature, an exact-penalty line
//!   search, and elastic-mode infeasibility certificates.
//! - [`driver`]: the adaptive partition-refinement loop and its reports.
//! - [`rng`]: the seedable generator used by sampling studies.

pub mod bernstein;
pub mod bound;
pub mod driver;
pub mod expr;
pub mod interval;
pub mod nlp;
pub mod ode;
pub mod rng;

pub use bound::{BoundMethod, BoundParams};
pub use driver::{run, IterationRecord, PathConstraint, ProblemSpec, SolveReport};
pub use ode::ControlGrid;
pub use expr::{parse, Bindings, Expr, Var};
pub use interval::Interval;
