use std::collections::HashMap;

use super::chart::{Chart, Point};
use super::expr::{Expr, Node};
use crate::error::{Error, Result};

/// Divisors with magnitude below this abort evaluation.
pub const DIVISION_GUARD: f64 = 1e-12;

#[derive(Clone, Copy, Debug)]
enum Op {
    Const(f64),
    Var(usize),
    Neg(usize),
    Sin(usize),
    Cos(usize),
    Exp(usize),
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Div(usize, usize),
    Pow(usize, u32),
}

/// A batch of expressions flattened into one instruction list. Every
/// distinct node is computed once per point no matter how often it is
/// shared, which keeps evaluation linear in the DAG size.
#[derive(Clone, Debug)]
pub struct Tape {
    ops: Vec<Op>,
    outputs: Vec<usize>,
    // Divisor expression for each Div op, for error reporting.
    divisors: HashMap<usize, Expr>,
    max_var: Option<usize>,
}

/// Raised by [`Tape::eval`]; carries the divisor for reporting.
#[derive(Clone, Debug)]
pub struct GuardHit {
    pub divisor: Expr,
    pub value: f64,
}

impl GuardHit {
    pub fn into_error(self, chart: &Chart) -> Error {
        Error::DivisionNearZero {
            divisor: self.divisor.display(chart).to_string(),
            value: self.value,
        }
    }
}

impl Tape {
    pub fn compile(exprs: &[Expr]) -> Tape {
        let mut index: HashMap<usize, usize> = HashMap::new();
        let mut ops = Vec::new();
        let mut divisors = HashMap::new();
        let mut max_var: Option<usize> = None;
        let mut outputs = Vec::with_capacity(exprs.len());
        // Iterative post-order walk; deep sums must not overflow the stack.
        for root in exprs {
            let mut stack: Vec<(Expr, bool)> = vec![(root.clone(), false)];
            while let Some((e, expanded)) = stack.pop() {
                if index.contains_key(&e.id()) {
                    continue;
                }
                if !expanded {
                    stack.push((e.clone(), true));
                    for child in e.children() {
                        if !index.contains_key(&child.id()) {
                            stack.push((child.clone(), false));
                        }
                    }
                    continue;
                }
                let at = |x: &Expr| index[&x.id()];
                let op = match e.node() {
                    Node::Const(c) => Op::Const(*c),
                    Node::Var(i) => {
                        max_var = Some(max_var.map_or(*i, |m| m.max(*i)));
                        Op::Var(*i)
                    }
                    Node::Neg(a) => Op::Neg(at(a)),
                    Node::Sin(a) => Op::Sin(at(a)),
                    Node::Cos(a) => Op::Cos(at(a)),
                    Node::Exp(a) => Op::Exp(at(a)),
                    Node::Add(a, b) => Op::Add(at(a), at(b)),
                    Node::Sub(a, b) => Op::Sub(at(a), at(b)),
                    Node::Mul(a, b) => Op::Mul(at(a), at(b)),
                    Node::Div(a, b) => {
                        divisors.insert(ops.len(), b.clone());
                        Op::Div(at(a), at(b))
                    }
                    Node::Pow(a, n) => Op::Pow(at(a), *n),
                };
                index.insert(e.id(), ops.len());
                ops.push(op);
            }
            outputs.push(index[&root.id()]);
        }
        Tape {
            ops,
            outputs,
            divisors,
            max_var,
        }
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn outputs(&self) -> usize {
        self.outputs.len()
    }

    /// Smallest point dimension this tape can be evaluated on.
    pub fn required_dim(&self) -> usize {
        self.max_var.map_or(0, |m| m + 1)
    }

    /// Evaluates every output at `x`, writing into `out`. `scratch` is
    /// reused across calls.
    pub fn eval_into(
        &self,
        x: &[f64],
        scratch: &mut Vec<f64>,
        out: &mut Vec<f64>,
    ) -> std::result::Result<(), GuardHit> {
        scratch.clear();
        scratch.reserve(self.ops.len());
        for (k, op) in self.ops.iter().enumerate() {
            let v = match *op {
                Op::Const(c) => c,
                Op::Var(i) => x[i],
                Op::Neg(a) => -scratch[a],
                Op::Sin(a) => scratch[a].sin(),
                Op::Cos(a) => scratch[a].cos(),
                Op::Exp(a) => scratch[a].exp(),
                Op::Add(a, b) => scratch[a] + scratch[b],
                Op::Sub(a, b) => scratch[a] - scratch[b],
                Op::Mul(a, b) => scratch[a] * scratch[b],
                Op::Div(a, b) => {
                    let d = scratch[b];
                    if !(d.abs() >= DIVISION_GUARD) {
                        return Err(GuardHit {
                            divisor: self.divisors[&k].clone(),
                            value: d,
                        });
                    }
                    scratch[a] / d
                }
                Op::Pow(a, n) => scratch[a].powi(n as i32),
            };
            scratch.push(v);
        }
        out.clear();
        out.extend(self.outputs.iter().map(|&i| scratch[i]));
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> std::result::Result<Vec<f64>, GuardHit> {
        let mut scratch = Vec::new();
        let mut out = Vec::new();
        self.eval_into(x, &mut scratch, &mut out)?;
        Ok(out)
    }
}

/// Value of `e` at `p`.
pub fn evaluate(e: &Expr, p: &Point) -> Result<f64> {
    let tape = Tape::compile(std::slice::from_ref(e));
    if tape.required_dim() > p.values().len() {
        return Err(Error::DimensionMismatch(format!(
            "expression references coordinate index {} outside the chart",
            tape.required_dim() - 1
        )));
    }
    tape.eval(p.values())
        .map(|v| v[0])
        .map_err(|g| g.into_error(p.chart()))
}

/// Evaluates at raw coordinates; reports guard hits with generic names.
pub fn evaluate_at(e: &Expr, x: &[f64]) -> std::result::Result<f64, GuardHit> {
    Tape::compile(std::slice::from_ref(e)).eval(x).map(|v| v[0])
}
