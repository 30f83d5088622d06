use std::fmt;

use super::{Expr, Kind};

const ADD: u8 = 1;
const MUL: u8 = 2;
const NEG: u8 = 3;
const POW: u8 = 4;
const ATOM: u8 = 5;

fn prec(e: &Expr) -> u8 {
    match e.kind() {
        Kind::Const(c) if *c < 0.0 => ATOM, // printed parenthesized
        Kind::Const(_) | Kind::Var(_) | Kind::Call(..) => ATOM,
        Kind::Neg(_) => NEG,
        Kind::Add(..) | Kind::Sub(..) => ADD,
        Kind::Mul(..) | Kind::Div(..) => MUL,
        Kind::Pow(..) => POW,
    }
}

fn number(f: &mut fmt::Formatter<'_>, c: f64) -> fmt::Result {
    if c == std::f64::consts::PI {
        return write!(f, "pi");
    }
    if c < 0.0 {
        write!(f, "(-{:?})", -c)
    } else {
        write!(f, "{:?}", c)
    }
}

fn child(f: &mut fmt::Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
    if prec(e) < min {
        write!(f, "(")?;
        write_expr(f, e)?;
        write!(f, ")")
    } else {
        write_expr(f, e)
    }
}

fn write_expr(f: &mut fmt::Formatter<'_>, e: &Expr) -> fmt::Result {
    match e.kind() {
        Kind::Const(c) => number(f, *c),
        Kind::Var(v) => write!(f, "{v}"),
        Kind::Neg(a) => {
            write!(f, "-")?;
            child(f, a, NEG)
        }
        Kind::Add(a, b) => {
            child(f, a, ADD)?;
            write!(f, " + ")?;
            child(f, b, ADD + 1)
        }
        Kind::Sub(a, b) => {
            child(f, a, ADD)?;
            write!(f, " - ")?;
            child(f, b, ADD + 1)
        }
        Kind::Mul(a, b) => {
            child(f, a, MUL)?;
            write!(f, " * ")?;
            child(f, b, MUL + 1)
        }
        Kind::Div(a, b) => {
            child(f, a, MUL)?;
            write!(f, " / ")?;
            child(f, b, MUL + 1)
        }
        Kind::Pow(a, p) => {
            child(f, a, ATOM)?;
            write!(f, "^")?;
            number(f, *p)
        }
        Kind::Call(func, a) => {
            write!(f, "{}(", func.name())?;
            write_expr(f, a)?;
            write!(f, ")")
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, self)
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::parse;

    #[test]
    fn prints_minimal_parentheses() {
        let vars = ["x", "y"];
        let cases = [
            ("x + y * 2", "x + 2.0 * y"),
            ("(x + y) * 2", "2.0 * (x + y)"),
            ("x - (y - 1)", "x - (y - 1.0)"),
            ("-x^2", "-x^2.0"),
            ("(-x)^2", "(-x)^2.0"),
            ("x^-1", "x^(-1.0)"),
            ("sin(x)/cos(y)", "sin(x) / cos(y)"),
            ("pi*x", "pi * x"),
        ];
        for (src, want) in cases {
            let e = parse(src, &vars).unwrap();
            assert_eq!(e.to_string(), want, "{src}");
        }
    }
}
