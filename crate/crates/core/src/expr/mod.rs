//! Symbolic scalar expressions over named real variables.
//!
//! An [`Expr`] is an immutable, reference-counted DAG. Smart constructors
//! apply a light simplification (constant folding, 0/1 absorption, power
//! merging) so repeated differentiation stays compact. Nodes carry a
//! structural hash computed at construction, which makes equality checks
//! and common-subexpression elimination cheap.

mod diff;
mod parse;
mod print;
mod tape;

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

pub use diff::DiffCache;
pub use parse::{parse, parse_with_constants, ParseError};
pub use tape::{EvalError, Tape};

/// Elementary functions of the grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Sinh,
    Cosh,
}

impl Func {
    pub const ALL: [Func; 8] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Sinh,
        Func::Cosh,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.iter().copied().find(|f| f.name() == name)
    }

    /// Applies the function, returning `None` outside its real domain.
    pub fn apply(self, x: f64) -> Option<f64> {
        let v = match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Tan => {
                if x.cos() == 0.0 {
                    return None;
                }
                x.tan()
            }
            Func::Exp => x.exp(),
            Func::Log => {
                if x <= 0.0 {
                    return None;
                }
                x.ln()
            }
            Func::Sqrt => {
                if x < 0.0 {
                    return None;
                }
                x.sqrt()
            }
            Func::Sinh => x.sinh(),
            Func::Cosh => x.cosh(),
        };
        Some(v)
    }
}

#[derive(Debug)]
pub(crate) enum Kind {
    Const(f64),
    Var(Arc<str>),
    Neg(Expr),
    Add(Expr, Expr),
    Sub(Expr, Expr),
    Mul(Expr, Expr),
    Div(Expr, Expr),
    /// Power with a constant exponent.
    Pow(Expr, f64),
    Call(Func, Expr),
}

#[derive(Debug)]
pub(crate) struct Node {
    pub(crate) kind: Kind,
    hash: u64,
    size: usize,
}

/// Immutable symbolic expression.
#[derive(Clone)]
pub struct Expr(Arc<Node>);

impl std::fmt::Debug for Expr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Expr({})", self)
    }
}

fn const_bits(c: f64) -> u64 {
    // fold -0.0 into 0.0 so both hash alike
    if c == 0.0 {
        0
    } else {
        c.to_bits()
    }
}

impl Expr {
    fn make(kind: Kind) -> Expr {
        let mut h = DefaultHasher::new();
        let size;
        match &kind {
            Kind::Const(c) => {
                0u8.hash(&mut h);
                const_bits(*c).hash(&mut h);
                size = 1;
            }
            Kind::Var(name) => {
                1u8.hash(&mut h);
                name.hash(&mut h);
                size = 1;
            }
            Kind::Neg(a) => {
                2u8.hash(&mut h);
                a.0.hash.hash(&mut h);
                size = 1 + a.0.size;
            }
            Kind::Add(a, b) | Kind::Sub(a, b) | Kind::Mul(a, b) | Kind::Div(a, b) => {
                let tag: u8 = match &kind {
                    Kind::Add(..) => 3,
                    Kind::Sub(..) => 4,
                    Kind::Mul(..) => 5,
                    _ => 6,
                };
                tag.hash(&mut h);
                a.0.hash.hash(&mut h);
                b.0.hash.hash(&mut h);
                size = 1usize.saturating_add(a.0.size).saturating_add(b.0.size);
            }
            Kind::Pow(a, e) => {
                7u8.hash(&mut h);
                a.0.hash.hash(&mut h);
                const_bits(*e).hash(&mut h);
                size = 1 + a.0.size;
            }
            Kind::Call(f, a) => {
                8u8.hash(&mut h);
                f.hash(&mut h);
                a.0.hash.hash(&mut h);
                size = 1 + a.0.size;
            }
        }
        Expr(Arc::new(Node {
            kind,
            hash: h.finish(),
            size,
        }))
    }

    pub(crate) fn kind(&self) -> &Kind {
        &self.0.kind
    }

    pub(crate) fn ptr(&self) -> usize {
        Arc::as_ptr(&self.0) as usize
    }

    /// Size of the expression viewed as a tree (shared nodes counted each time).
    pub fn tree_size(&self) -> usize {
        self.0.size
    }

    pub fn constant(c: f64) -> Expr {
        Expr::make(Kind::Const(c))
    }

    pub fn zero() -> Expr {
        Expr::constant(0.0)
    }

    pub fn one() -> Expr {
        Expr::constant(1.0)
    }

    pub fn var(name: &str) -> Expr {
        Expr::make(Kind::Var(Arc::from(name)))
    }

    pub fn as_const(&self) -> Option<f64> {
        match self.kind() {
            Kind::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    pub fn is_one(&self) -> bool {
        self.as_const() == Some(1.0)
    }

    /// Structural equality. Pointer-equal subtrees short-circuit.
    pub fn same_as(&self, other: &Expr) -> bool {
        if Arc::ptr_eq(&self.0, &other.0) {
            return true;
        }
        if self.0.hash != other.0.hash || self.0.size != other.0.size {
            return false;
        }
        match (self.kind(), other.kind()) {
            (Kind::Const(a), Kind::Const(b)) => const_bits(*a) == const_bits(*b),
            (Kind::Var(a), Kind::Var(b)) => a == b,
            (Kind::Neg(a), Kind::Neg(b)) => a.same_as(b),
            (Kind::Add(a1, b1), Kind::Add(a2, b2))
            | (Kind::Sub(a1, b1), Kind::Sub(a2, b2))
            | (Kind::Mul(a1, b1), Kind::Mul(a2, b2))
            | (Kind::Div(a1, b1), Kind::Div(a2, b2)) => a1.same_as(a2) && b1.same_as(b2),
            (Kind::Pow(a, e1), Kind::Pow(b, e2)) => {
                const_bits(*e1) == const_bits(*e2) && a.same_as(b)
            }
            (Kind::Call(f1, a), Kind::Call(f2, b)) => f1 == f2 && a.same_as(b),
            _ => false,
        }
    }

    // Bounded structural comparison used by the simplifier; large shared
    // DAGs can have exponential tree size.
    fn cheap_same(&self, other: &Expr) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || (self.0.size <= 64 && self.same_as(other))
    }

    pub fn neg(&self) -> Expr {
        match self.kind() {
            Kind::Const(c) => Expr::constant(-c),
            Kind::Neg(a) => a.clone(),
            Kind::Sub(a, b) => Expr::make(Kind::Sub(b.clone(), a.clone())),
            _ => Expr::make(Kind::Neg(self.clone())),
        }
    }

    pub fn add(&self, other: &Expr) -> Expr {
        match (self.as_const(), other.as_const()) {
            (Some(a), Some(b)) => return Expr::constant(a + b),
            (Some(a), _) if a == 0.0 => return other.clone(),
            (_, Some(b)) if b == 0.0 => return self.clone(),
            _ => {}
        }
        if let Kind::Neg(b) = other.kind() {
            return self.sub(b);
        }
        if let Kind::Neg(a) = self.kind() {
            return other.sub(a);
        }
        Expr::make(Kind::Add(self.clone(), other.clone()))
    }

    pub fn sub(&self, other: &Expr) -> Expr {
        match (self.as_const(), other.as_const()) {
            (Some(a), Some(b)) => return Expr::constant(a - b),
            (Some(a), _) if a == 0.0 => return other.neg(),
            (_, Some(b)) if b == 0.0 => return self.clone(),
            _ => {}
        }
        if let Kind::Neg(b) = other.kind() {
            return self.add(b);
        }
        if self.cheap_same(other) {
            return Expr::zero();
        }
        Expr::make(Kind::Sub(self.clone(), other.clone()))
    }

    pub fn mul(&self, other: &Expr) -> Expr {
        match (self.as_const(), other.as_const()) {
            (Some(a), Some(b)) => return Expr::constant(a * b),
            (Some(a), _) => return other.scale(a),
            (_, Some(b)) => return self.scale(b),
            _ => {}
        }
        match (self.kind(), other.kind()) {
            (Kind::Neg(a), Kind::Neg(b)) => return a.mul(b),
            (Kind::Neg(a), _) => return a.mul(other).neg(),
            (_, Kind::Neg(b)) => return self.mul(b).neg(),
            // constant factors float to the left: c*(x) * y -> c*(x*y)
            (Kind::Mul(c, a), _) if c.as_const().is_some() => {
                return a.mul(other).scale(c.as_const().unwrap());
            }
            (_, Kind::Mul(c, b)) if c.as_const().is_some() => {
                return self.mul(b).scale(c.as_const().unwrap());
            }
            _ => {}
        }
        if self.cheap_same(other) {
            return self.powf(2.0);
        }
        Expr::make(Kind::Mul(self.clone(), other.clone()))
    }

    /// Multiplies by a real constant, keeping the constant as the leftmost factor.
    pub fn scale(&self, c: f64) -> Expr {
        if c == 0.0 {
            return Expr::zero();
        }
        if c == 1.0 {
            return self.clone();
        }
        if c == -1.0 {
            return self.neg();
        }
        match self.kind() {
            Kind::Const(a) => Expr::constant(a * c),
            Kind::Neg(a) => a.scale(-c),
            Kind::Mul(k, a) if k.as_const().is_some() => {
                let f = k.as_const().unwrap() * c;
                if f == 1.0 {
                    a.clone()
                } else {
                    Expr::make(Kind::Mul(Expr::constant(f), a.clone()))
                }
            }
            _ => Expr::make(Kind::Mul(Expr::constant(c), self.clone())),
        }
    }

    pub fn div(&self, other: &Expr) -> Expr {
        match (self.as_const(), other.as_const()) {
            (Some(a), Some(b)) if b != 0.0 => return Expr::constant(a / b),
            (Some(a), _) if a == 0.0 => return Expr::zero(),
            (_, Some(b)) if b == 1.0 => return self.clone(),
            (_, Some(b)) if b == -1.0 => return self.neg(),
            _ => {}
        }
        if let (Kind::Neg(a), Kind::Neg(b)) = (self.kind(), other.kind()) {
            return a.div(b);
        }
        if let Kind::Neg(a) = self.kind() {
            return a.div(other).neg();
        }
        if self.cheap_same(other) {
            return Expr::one();
        }
        Expr::make(Kind::Div(self.clone(), other.clone()))
    }

    /// Constant real power. `(x^a)^b` merges to `x^(ab)` when `b` is an integer.
    pub fn powf(&self, e: f64) -> Expr {
        if e == 0.0 {
            return Expr::one();
        }
        if e == 1.0 {
            return self.clone();
        }
        if let Some(c) = self.as_const() {
            if let Some(v) = pow_value(c, e) {
                return Expr::constant(v);
            }
        }
        if let Kind::Pow(a, inner) = self.kind() {
            if e.fract() == 0.0 {
                return a.powf(inner * e);
            }
        }
        Expr::make(Kind::Pow(self.clone(), e))
    }

    pub fn call(f: Func, arg: &Expr) -> Expr {
        if let Some(c) = arg.as_const() {
            if let Some(v) = f.apply(c) {
                // keep the node when folding would lose exactness at removable points
                if v.is_finite() {
                    return Expr::constant(v);
                }
            }
        }
        Expr::make(Kind::Call(f, arg.clone()))
    }

    pub fn sin(&self) -> Expr {
        Expr::call(Func::Sin, self)
    }
    pub fn cos(&self) -> Expr {
        Expr::call(Func::Cos, self)
    }
    pub fn tan(&self) -> Expr {
        Expr::call(Func::Tan, self)
    }
    pub fn exp(&self) -> Expr {
        Expr::call(Func::Exp, self)
    }
    pub fn ln(&self) -> Expr {
        Expr::call(Func::Log, self)
    }
    pub fn sqrt(&self) -> Expr {
        Expr::call(Func::Sqrt, self)
    }
    pub fn sinh(&self) -> Expr {
        Expr::call(Func::Sinh, self)
    }
    pub fn cosh(&self) -> Expr {
        Expr::call(Func::Cosh, self)
    }

    /// Sum of a sequence; the empty sum is zero.
    /// Terms are combined pairwise, which keeps the tree depth logarithmic.
    pub fn sum<I: IntoIterator<Item = Expr>>(terms: I) -> Expr {
        let mut level: Vec<Expr> = terms.into_iter().filter(|t| !t.is_zero()).collect();
        if level.is_empty() {
            return Expr::zero();
        }
        while level.len() > 1 {
            level = level
                .chunks(2)
                .map(|c| if c.len() == 2 { c[0].add(&c[1]) } else { c[0].clone() })
                .collect();
        }
        level.pop().unwrap()
    }

    /// Names of the free variables, sorted and deduplicated.
    pub fn variables(&self) -> Vec<String> {
        let mut seen = std::collections::HashSet::new();
        let mut out = std::collections::BTreeSet::new();
        let mut stack = vec![self.clone()];
        while let Some(e) = stack.pop() {
            if !seen.insert(e.ptr()) {
                continue;
            }
            match e.kind() {
                Kind::Const(_) => {}
                Kind::Var(v) => {
                    out.insert(v.to_string());
                }
                Kind::Neg(a) | Kind::Pow(a, _) | Kind::Call(_, a) => stack.push(a.clone()),
                Kind::Add(a, b) | Kind::Sub(a, b) | Kind::Mul(a, b) | Kind::Div(a, b) => {
                    stack.push(a.clone());
                    stack.push(b.clone());
                }
            }
        }
        out.into_iter().collect()
    }

    /// Exact partial derivative with respect to `var`.
    pub fn differentiate(&self, var: &str) -> Expr {
        DiffCache::new().diff(self, var)
    }

    /// Simultaneous substitution of variables by expressions.
    pub fn substitute(&self, bindings: &[(&str, Expr)]) -> Expr {
        diff::substitute(self, bindings)
    }

    /// Substitution applied to many expressions with one shared memo table.
    pub fn substitute_all(exprs: &[Expr], bindings: &[(&str, Expr)]) -> Vec<Expr> {
        diff::substitute_all(exprs, bindings)
    }

    /// Evaluates the expression with the given variable bindings.
    pub fn eval(&self, bindings: &[(&str, f64)]) -> Result<f64, EvalError> {
        let names: Vec<&str> = bindings.iter().map(|(n, _)| *n).collect();
        let values: Vec<f64> = bindings.iter().map(|(_, v)| *v).collect();
        let tape = Tape::compile(std::slice::from_ref(self), &names)?;
        Ok(tape.eval(&values)?[0])
    }

    /// Evaluates using a map of bindings.
    pub fn eval_map(
        &self,
        bindings: &std::collections::HashMap<String, f64>,
    ) -> Result<f64, EvalError> {
        let pairs: Vec<(&str, f64)> = bindings.iter().map(|(k, v)| (k.as_str(), *v)).collect();
        self.eval(&pairs)
    }
}

pub(crate) fn pow_value(base: f64, e: f64) -> Option<f64> {
    if e.fract() == 0.0 && e.abs() <= i32::MAX as f64 {
        if base == 0.0 && e < 0.0 {
            return None;
        }
        Some(base.powi(e as i32))
    } else {
        if base < 0.0 || (base == 0.0 && e < 0.0) {
            return None;
        }
        Some(base.powf(e))
    }
}

impl std::ops::Add for &Expr {
    type Output = Expr;
    fn add(self, rhs: &Expr) -> Expr {
        Expr::add(self, rhs)
    }
}
impl std::ops::Sub for &Expr {
    type Output = Expr;
    fn sub(self, rhs: &Expr) -> Expr {
        Expr::sub(self, rhs)
    }
}
impl std::ops::Mul for &Expr {
    type Output = Expr;
    fn mul(self, rhs: &Expr) -> Expr {
        Expr::mul(self, rhs)
    }
}
impl std::ops::Div for &Expr {
    type Output = Expr;
    fn div(self, rhs: &Expr) -> Expr {
        Expr::div(self, rhs)
    }
}
impl std::ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}

impl From<f64> for Expr {
    fn from(c: f64) -> Expr {
        Expr::constant(c)
    }
}
