//! Flat compiled form for batch expression evaluation.
//!
//! The ODE right-hand side evaluates the dynamics and their Jacobians at
//! every integrator stage; walking the DAG there would dominate runtime.
//! [`Program::compile`] flattens a set of expressions into one instruction
//! tape, deduplicating shared nodes by pointer identity so common
//! subexpressions are computed once per evaluation.

use super::{Bindings, EvalError, Expr, Node};
use std::collections::HashMap;

#[derive(Debug, Clone, Copy)]
enum Instr {
    Const(f64),
    State(usize),
    Control(usize),
    Time,
    Neg(usize),
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Div(usize, usize),
    PowInt(usize, u32),
    Sin(usize),
    Cos(usize),
    Exp(usize),
    Ln(usize),
}

/// A compiled batch of expressions. Instruction `i` writes slot `i`.
#[derive(Debug)]
pub struct Program {
    instrs: Vec<Instr>,
    outputs: Vec<usize>,
}

impl Program {
    pub fn compile(exprs: &[Expr]) -> Program {
        let mut instrs = Vec::new();
        let mut memo: HashMap<*const Node, usize> = HashMap::new();
        let outputs = exprs.iter().map(|e| compile_node(e, &mut instrs, &mut memo)).collect();
        Program { instrs, outputs }
    }

    pub fn n_outputs(&self) -> usize {
        self.outputs.len()
    }

    /// Slots required by [`Program::eval_into`]; allocate once and reuse.
    pub fn scratch_len(&self) -> usize {
        self.instrs.len()
    }

    /// Evaluates every expression in the batch; `out` receives one value per
    /// compiled expression. `scratch` must hold at least `scratch_len()`.
    pub fn eval_into(
        &self,
        b: &Bindings,
        scratch: &mut [f64],
        out: &mut [f64],
    ) -> Result<(), EvalError> {
        debug_assert!(scratch.len() >= self.instrs.len());
        debug_assert_eq!(out.len(), self.outputs.len());
        for (i, instr) in self.instrs.iter().enumerate() {
            scratch[i] = match *instr {
                Instr::Const(c) => c,
                Instr::State(k) => b.x[k],
                Instr::Control(k) => b.u[k],
                Instr::Time => b.t,
                Instr::Neg(a) => -scratch[a],
                Instr::Add(a, c) => scratch[a] + scratch[c],
                Instr::Sub(a, c) => scratch[a] - scratch[c],
                Instr::Mul(a, c) => scratch[a] * scratch[c],
                Instr::Div(a, c) => {
                    if scratch[c] == 0.0 {
                        return Err(EvalError::DivByZero);
                    }
                    scratch[a] / scratch[c]
                }
                Instr::PowInt(a, n) => scratch[a].powi(n as i32),
                Instr::Sin(a) => scratch[a].sin(),
                Instr::Cos(a) => scratch[a].cos(),
                Instr::Exp(a) => scratch[a].exp(),
                Instr::Ln(a) => {
                    let v = scratch[a];
                    if v <= 0.0 {
                        return Err(EvalError::LnDomain(v));
                    }
                    v.ln()
                }
            };
        }
        for (j, &slot) in self.outputs.iter().enumerate() {
            out[j] = scratch[slot];
        }
        Ok(())
    }
}

fn compile_node(
    e: &Expr,
    instrs: &mut Vec<Instr>,
    memo: &mut HashMap<*const Node, usize>,
) -> usize {
    if let Some(&slot) = memo.get(&e.node_ptr()) {
        return slot;
    }
    let instr = match e.node() {
        Node::Const(c) => Instr::Const(*c),
        Node::State(k) => Instr::State(*k),
        Node::Control(k) => Instr::Control(*k),
        Node::Time => Instr::Time,
        Node::Neg(a) => Instr::Neg(compile_node(a, instrs, memo)),
        Node::Add(a, b) => {
            let (sa, sb) = (compile_node(a, instrs, memo), compile_node(b, instrs, memo));
            Instr::Add(sa, sb)
        }
        Node::Sub(a, b) => {
            let (sa, sb) = (compile_node(a, instrs, memo), compile_node(b, instrs, memo));
            Instr::Sub(sa, sb)
        }
        Node::Mul(a, b) => {
            let (sa, sb) = (compile_node(a, instrs, memo), compile_node(b, instrs, memo));
            Instr::Mul(sa, sb)
        }
        Node::Div(a, b) => {
            let (sa, sb) = (compile_node(a, instrs, memo), compile_node(b, instrs, memo));
            Instr::Div(sa, sb)
        }
        Node::PowInt(a, n) => Instr::PowInt(compile_node(a, instrs, memo), *n),
        Node::Sin(a) => Instr::Sin(compile_node(a, instrs, memo)),
        Node::Cos(a) => Instr::Cos(compile_node(a, instrs, memo)),
        Node::Exp(a) => Instr::Exp(compile_node(a, instrs, memo)),
        Node::Ln(a) => Instr::Ln(compile_node(a, instrs, memo)),
    };
    let slot = instrs.len();
    instrs.push(instr);
    memo.insert(e.node_ptr(), slot);
    slot
}
