//! Flattened evaluation of many expressions at once.
//!
//! Compilation walks the DAGs of all requested outputs, merges structurally
//! identical subtrees, and emits a straight-line program in topological order.
//! Evaluating a tape at a point is then one pass over a register file.

use std::collections::HashMap;

use thiserror::Error;

use super::{pow_value, Expr, Func, Kind};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("domain error in `{node}`: {reason}")]
    Domain { node: String, reason: String },
}

#[derive(Debug, Clone, Copy)]
enum Op {
    Const(f64),
    Var(usize),
    Neg(u32),
    Add(u32, u32),
    Sub(u32, u32),
    Mul(u32, u32),
    Div(u32, u32),
    Powi(u32, i32),
    Powf(u32, f64),
    Call(Func, u32),
}

#[derive(Hash, PartialEq, Eq)]
enum Key {
    Const(u64),
    Var(usize),
    Neg(u32),
    Add(u32, u32),
    Sub(u32, u32),
    Mul(u32, u32),
    Div(u32, u32),
    Pow(u32, u64),
    Call(Func, u32),
}

/// Compiled straight-line program evaluating a fixed list of expressions.
#[derive(Debug, Clone)]
pub struct Tape {
    ops: Vec<Op>,
    // source node per op, kept for error reporting
    nodes: Vec<Expr>,
    outputs: Vec<u32>,
    n_vars: usize,
}

impl Tape {
    /// Compiles `exprs` over the ordered variable list `vars`.
    pub fn compile(exprs: &[Expr], vars: &[&str]) -> Result<Tape, EvalError> {
        let mut b = Builder {
            ops: Vec::new(),
            nodes: Vec::new(),
            by_ptr: HashMap::new(),
            by_key: HashMap::new(),
            vars,
        };
        let outputs = exprs
            .iter()
            .map(|e| b.emit(e))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Tape {
            ops: b.ops,
            nodes: b.nodes,
            outputs,
            n_vars: vars.len(),
        })
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn n_outputs(&self) -> usize {
        self.outputs.len()
    }

    /// Evaluates all outputs at the given variable values.
    pub fn eval(&self, values: &[f64]) -> Result<Vec<f64>, EvalError> {
        let mut regs = Vec::with_capacity(self.ops.len());
        self.eval_into(values, &mut regs)?;
        Ok(self.outputs.iter().map(|&o| regs[o as usize]).collect())
    }

    fn eval_into(&self, values: &[f64], regs: &mut Vec<f64>) -> Result<(), EvalError> {
        assert_eq!(values.len(), self.n_vars, "tape expects {} variables", self.n_vars);
        regs.clear();
        for (i, op) in self.ops.iter().enumerate() {
            let r = |k: &u32| regs[*k as usize];
            let v = match op {
                Op::Const(c) => *c,
                Op::Var(k) => values[*k],
                Op::Neg(a) => -r(a),
                Op::Add(a, b) => r(a) + r(b),
                Op::Sub(a, b) => r(a) - r(b),
                Op::Mul(a, b) => r(a) * r(b),
                Op::Div(a, b) => {
                    let d = r(b);
                    if d == 0.0 {
                        return Err(self.domain(i, "division by zero"));
                    }
                    r(a) / d
                }
                Op::Powi(a, p) => {
                    let x = r(a);
                    if x == 0.0 && *p < 0 {
                        return Err(self.domain(i, "zero raised to a negative power"));
                    }
                    x.powi(*p)
                }
                Op::Powf(a, p) => match pow_value(r(a), *p) {
                    Some(v) => v,
                    None => return Err(self.domain(i, "power outside its real domain")),
                },
                Op::Call(f, a) => match f.apply(r(a)) {
                    Some(v) => v,
                    None => {
                        return Err(self.domain(i, &format!("{} outside its domain", f.name())))
                    }
                },
            };
            regs.push(v);
        }
        Ok(())
    }

    fn domain(&self, i: usize, reason: &str) -> EvalError {
        let mut node = self.nodes[i].to_string();
        if node.len() > 160 {
            let mut cut = 160;
            while !node.is_char_boundary(cut) {
                cut -= 1;
            }
            node.truncate(cut);
            node.push_str("...");
        }
        EvalError::Domain {
            node,
            reason: reason.to_string(),
        }
    }
}

struct Builder<'v> {
    ops: Vec<Op>,
    nodes: Vec<Expr>,
    by_ptr: HashMap<usize, (Expr, u32)>,
    by_key: HashMap<Key, u32>,
    vars: &'v [&'v str],
}

impl Builder<'_> {
    fn push(&mut self, key: Key, op: Op, node: &Expr) -> u32 {
        if let Some(&slot) = self.by_key.get(&key) {
            return slot;
        }
        let slot = self.ops.len() as u32;
        self.ops.push(op);
        self.nodes.push(node.clone());
        self.by_key.insert(key, slot);
        slot
    }

    // Iterative post-order walk; deep derivative chains would overflow the
    // call stack if this recursed.
    fn emit(&mut self, root: &Expr) -> Result<u32, EvalError> {
        let mut stack: Vec<(Expr, bool)> = vec![(root.clone(), false)];
        while let Some((e, expanded)) = stack.pop() {
            if self.by_ptr.contains_key(&e.ptr()) {
                continue;
            }
            if !expanded {
                stack.push((e.clone(), true));
                match e.kind() {
                    Kind::Const(_) | Kind::Var(_) => {}
                    Kind::Neg(a) | Kind::Pow(a, _) | Kind::Call(_, a) => {
                        stack.push((a.clone(), false))
                    }
                    Kind::Add(a, b) | Kind::Sub(a, b) | Kind::Mul(a, b) | Kind::Div(a, b) => {
                        stack.push((b.clone(), false));
                        stack.push((a.clone(), false));
                    }
                }
                continue;
            }
            let s = |x: &Expr, by_ptr: &HashMap<usize, (Expr, u32)>| by_ptr[&x.ptr()].1;
            let slot = match e.kind() {
                Kind::Const(c) => {
                    let bits = if *c == 0.0 { 0 } else { c.to_bits() };
                    self.push(Key::Const(bits), Op::Const(*c), &e)
                }
                Kind::Var(name) => {
                    let k = self
                        .vars
                        .iter()
                        .position(|v| *v == &**name)
                        .ok_or_else(|| EvalError::Unbound(name.to_string()))?;
                    self.push(Key::Var(k), Op::Var(k), &e)
                }
                Kind::Neg(a) => {
                    let a = s(a, &self.by_ptr);
                    self.push(Key::Neg(a), Op::Neg(a), &e)
                }
                Kind::Add(a, b) => {
                    let (a, b) = (s(a, &self.by_ptr), s(b, &self.by_ptr));
                    self.push(Key::Add(a, b), Op::Add(a, b), &e)
                }
                Kind::Sub(a, b) => {
                    let (a, b) = (s(a, &self.by_ptr), s(b, &self.by_ptr));
                    self.push(Key::Sub(a, b), Op::Sub(a, b), &e)
                }
                Kind::Mul(a, b) => {
                    let (a, b) = (s(a, &self.by_ptr), s(b, &self.by_ptr));
                    self.push(Key::Mul(a, b), Op::Mul(a, b), &e)
                }
                Kind::Div(a, b) => {
                    let (a, b) = (s(a, &self.by_ptr), s(b, &self.by_ptr));
                    self.push(Key::Div(a, b), Op::Div(a, b), &e)
                }
                Kind::Pow(a, p) => {
                    let a = s(a, &self.by_ptr);
                    let op = if p.fract() == 0.0 && p.abs() < i32::MAX as f64 {
                        Op::Powi(a, *p as i32)
                    } else {
                        Op::Powf(a, *p)
                    };
                    self.push(Key::Pow(a, p.to_bits()), op, &e)
                }
                Kind::Call(f, a) => {
                    let a = s(a, &self.by_ptr);
                    self.push(Key::Call(*f, a), Op::Call(*f, a), &e)
                }
            };
            self.by_ptr.insert(e.ptr(), (e.clone(), slot));
        }
        Ok(self.by_ptr[&root.ptr()].1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    #[test]
    fn division_by_zero_reports_node() {
        let e = parse("1/x", &["x"]).unwrap();
        match e.eval(&[("x", 0.0)]) {
            Err(EvalError::Domain { node, reason }) => {
                assert_eq!(node, "1.0 / x");
                assert!(reason.contains("division"));
            }
            other => panic!("expected domain error, got {other:?}"),
        }
    }

    #[test]
    fn log_of_negative_is_domain_error() {
        let e = parse("2 + log(x)", &["x"]).unwrap();
        assert!(matches!(e.eval(&[("x", -1.0)]), Err(EvalError::Domain { .. })));
    }

    #[test]
    fn unbound_variable() {
        let e = parse("x + y", &["x", "y"]).unwrap();
        assert_eq!(e.eval(&[("x", 1.0)]), Err(EvalError::Unbound("y".into())));
    }

    #[test]
    fn structurally_equal_subtrees_share_a_slot() {
        let a = parse("sin(x*y) + cos(x)", &["x", "y"]).unwrap();
        let b = parse("sin(x*y) * 2", &["x", "y"]).unwrap();
        let tape = Tape::compile(&[a.clone(), b.clone()], &["x", "y"]).unwrap();
        // x, y, x*y, sin, cos, +, 2, *  -> 8 distinct ops
        assert_eq!(tape.len(), 8);
        let v = tape.eval(&[0.3, 0.7]).unwrap();
        let sxy = (0.21f64).sin();
        assert!((v[0] - (sxy + 0.3f64.cos())).abs() < 1e-15);
        assert!((v[1] - 2.0 * sxy).abs() < 1e-15);
    }

    #[test]
    fn cosine_matches_quadrature_of_minus_sine() {
        // cos(a) = 1 - \int_0^a sin, composite Simpson with 2000 panels
        let e = parse("cos(a)", &["a"]).unwrap();
        let a = std::f64::consts::FRAC_PI_4;
        let n = 2000;
        let h = a / n as f64;
        let mut s = 0.0;
        for k in 0..=n {
            let w = if k == 0 || k == n { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
            s += w * (k as f64 * h).sin();
        }
        let quad = 1.0 - s * h / 3.0;
        assert!((e.eval(&[("a", a)]).unwrap() - quad).abs() < 1e-10);
    }
}
