use std::collections::HashMap;
use std::sync::Arc;

use super::{Expr, Func, Kind};

/// Memo table for symbolic differentiation.
///
/// Keys are node identities, so a subexpression shared by many fields is
/// differentiated once per variable. The cache holds a clone of every key
/// node, which keeps the addresses stable for its lifetime.
#[derive(Default)]
pub struct DiffCache {
    memo: HashMap<(usize, Arc<str>), (Expr, Expr)>,
}

impl DiffCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.memo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.memo.is_empty()
    }

    pub fn diff(&mut self, e: &Expr, var: &str) -> Expr {
        let var: Arc<str> = Arc::from(var);
        self.diff_inner(e, &var)
    }

    fn diff_inner(&mut self, e: &Expr, var: &Arc<str>) -> Expr {
        if let Kind::Const(_) = e.kind() {
            return Expr::zero();
        }
        if let Kind::Var(v) = e.kind() {
            return if v == var { Expr::one() } else { Expr::zero() };
        }
        let key = (e.ptr(), var.clone());
        if let Some((_, d)) = self.memo.get(&key) {
            return d.clone();
        }
        let d = match e.kind() {
            Kind::Const(_) | Kind::Var(_) => unreachable!(),
            Kind::Neg(a) => self.diff_inner(a, var).neg(),
            Kind::Add(a, b) => {
                let (da, db) = (self.diff_inner(a, var), self.diff_inner(b, var));
                da.add(&db)
            }
            Kind::Sub(a, b) => {
                let (da, db) = (self.diff_inner(a, var), self.diff_inner(b, var));
                da.sub(&db)
            }
            Kind::Mul(a, b) => {
                let (da, db) = (self.diff_inner(a, var), self.diff_inner(b, var));
                da.mul(b).add(&a.mul(&db))
            }
            Kind::Div(a, b) => {
                let (da, db) = (self.diff_inner(a, var), self.diff_inner(b, var));
                if db.is_zero() {
                    da.div(b)
                } else {
                    // (a/b)' = a'/b - (a/b) b'/b
                    da.sub(&e.mul(&db)).div(b)
                }
            }
            Kind::Pow(a, p) => {
                let da = self.diff_inner(a, var);
                if da.is_zero() {
                    Expr::zero()
                } else {
                    a.powf(p - 1.0).scale(*p).mul(&da)
                }
            }
            Kind::Call(f, a) => {
                let da = self.diff_inner(a, var);
                if da.is_zero() {
                    Expr::zero()
                } else {
                    let outer = match f {
                        Func::Sin => a.cos(),
                        Func::Cos => a.sin().neg(),
                        Func::Tan => Expr::one().add(&e.powf(2.0)),
                        Func::Exp => e.clone(),
                        Func::Log => return da.div(a).memo(self, key, e),
                        Func::Sqrt => return da.div(&e.scale(2.0)).memo(self, key, e),
                        Func::Sinh => a.cosh(),
                        Func::Cosh => a.sinh(),
                    };
                    outer.mul(&da)
                }
            }
        };
        self.memo.insert(key, (e.clone(), d.clone()));
        d
    }
}

impl Expr {
    fn memo(self, cache: &mut DiffCache, key: (usize, Arc<str>), src: &Expr) -> Expr {
        cache.memo.insert(key, (src.clone(), self.clone()));
        self
    }
}

pub(super) fn substitute(e: &Expr, bindings: &[(&str, Expr)]) -> Expr {
    let mut memo: HashMap<usize, (Expr, Expr)> = HashMap::new();
    subst_inner(e, bindings, &mut memo)
}

pub(super) fn substitute_all(es: &[Expr], bindings: &[(&str, Expr)]) -> Vec<Expr> {
    let mut memo: HashMap<usize, (Expr, Expr)> = HashMap::new();
    es.iter().map(|e| subst_inner(e, bindings, &mut memo)).collect()
}

fn subst_inner(
    e: &Expr,
    bindings: &[(&str, Expr)],
    memo: &mut HashMap<usize, (Expr, Expr)>,
) -> Expr {
    if let Some((_, r)) = memo.get(&e.ptr()) {
        return r.clone();
    }
    let r = match e.kind() {
        Kind::Const(_) => e.clone(),
        Kind::Var(v) => bindings
            .iter()
            .find(|(n, _)| *n == &**v)
            .map(|(_, x)| x.clone())
            .unwrap_or_else(|| e.clone()),
        Kind::Neg(a) => subst_inner(a, bindings, memo).neg(),
        Kind::Add(a, b) => subst_inner(a, bindings, memo).add(&subst_inner(b, bindings, memo)),
        Kind::Sub(a, b) => subst_inner(a, bindings, memo).sub(&subst_inner(b, bindings, memo)),
        Kind::Mul(a, b) => subst_inner(a, bindings, memo).mul(&subst_inner(b, bindings, memo)),
        Kind::Div(a, b) => subst_inner(a, bindings, memo).div(&subst_inner(b, bindings, memo)),
        Kind::Pow(a, p) => subst_inner(a, bindings, memo).powf(*p),
        Kind::Call(f, a) => Expr::call(*f, &subst_inner(a, bindings, memo)),
    };
    memo.insert(e.ptr(), (e.clone(), r.clone()));
    r
}
