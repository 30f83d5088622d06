//! Small dense linear algebra, numeric and symbolic.
//!
//! Matrices here are at most a handful of rows (chart dimensions), so plain
//! nested vectors and cofactor expansion are adequate.

use crate::expr::Expr;

pub type Matrix = Vec<Vec<f64>>;

pub fn zeros(r: usize, c: usize) -> Matrix {
    vec![vec![0.0; c]; r]
}

pub fn identity(n: usize) -> Matrix {
    let mut m = zeros(n, n);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

pub fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
    let (r, k, c) = (a.len(), b.len(), b.first().map_or(0, |x| x.len()));
    let mut out = zeros(r, c);
    for i in 0..r {
        for j in 0..c {
            out[i][j] = (0..k).map(|l| a[i][l] * b[l][j]).sum();
        }
    }
    out
}

pub fn transpose(a: &Matrix) -> Matrix {
    let c = a.first().map_or(0, |x| x.len());
    (0..c).map(|j| a.iter().map(|row| row[j]).collect()).collect()
}

/// Determinant by partial-pivot LU.
pub fn det(a: &Matrix) -> f64 {
    let n = a.len();
    let mut m = a.clone();
    let mut d = 1.0;
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs()))
            .unwrap();
        if m[piv][col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            m.swap(piv, col);
            d = -d;
        }
        d *= m[col][col];
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            for c in col..n {
                m[r][c] -= f * m[col][c];
            }
        }
    }
    d
}

/// Inverse by Gauss-Jordan elimination; `None` for singular input.
pub fn inverse(a: &Matrix) -> Option<Matrix> {
    let n = a.len();
    let mut m = a.clone();
    let mut inv = identity(n);
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs()))?;
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(piv, col);
        inv.swap(piv, col);
        let p = m[col][col];
        for c in 0..n {
            m[col][c] /= p;
            inv[col][c] /= p;
        }
        for r in 0..n {
            if r != col {
                let f = m[r][col];
                if f != 0.0 {
                    for c in 0..n {
                        m[r][c] -= f * m[col][c];
                        inv[r][c] -= f * inv[col][c];
                    }
                }
            }
        }
    }
    Some(inv)
}

/// Leading principal minors all positive.
pub fn is_positive_definite(a: &Matrix) -> bool {
    (1..=a.len()).all(|k| {
        let sub: Matrix = a[..k].iter().map(|row| row[..k].to_vec()).collect();
        det(&sub) > 0.0
    })
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn max_abs(a: &Matrix) -> f64 {
    a.iter().flatten().fold(0.0, |m, x| m.max(x.abs()))
}

/// `sqrt(g^{ik} g^{jl} A_ij A_kl)`, the norm of a 2-tensor with respect to g.
pub fn tensor_norm(g_inv: &Matrix, a: &Matrix) -> f64 {
    let m = a.len();
    let mut s = 0.0;
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                for l in 0..m {
                    s += g_inv[i][k] * g_inv[j][l] * a[i][j] * a[k][l];
                }
            }
        }
    }
    s.max(0.0).sqrt()
}

/// `sqrt(g^{ij} w_i w_j)`, the norm of a covector with respect to g.
pub fn covector_norm(g_inv: &Matrix, w: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..w.len() {
        for j in 0..w.len() {
            s += g_inv[i][j] * w[i] * w[j];
        }
    }
    s.max(0.0).sqrt()
}

fn minor(a: &[Vec<Expr>], skip_row: usize, skip_col: usize) -> Vec<Vec<Expr>> {
    a.iter()
        .enumerate()
        .filter(|(r, _)| *r != skip_row)
        .map(|(_, row)| {
            row.iter()
                .enumerate()
                .filter(|(c, _)| *c != skip_col)
                .map(|(_, e)| e.clone())
                .collect()
        })
        .collect()
}

/// Symbolic determinant by cofactor expansion along the first row.
pub fn sym_det(a: &[Vec<Expr>]) -> Expr {
    match a.len() {
        0 => Expr::one(),
        1 => a[0][0].clone(),
        2 => a[0][0].mul(&a[1][1]).sub(&a[0][1].mul(&a[1][0])),
        n => Expr::sum((0..n).filter(|&j| !a[0][j].is_zero()).map(|j| {
            let t = a[0][j].mul(&sym_det(&minor(a, 0, j)));
            if j % 2 == 0 {
                t
            } else {
                t.neg()
            }
        })),
    }
}

/// Symbolic inverse `adj(a) / det(a)` together with the determinant.
pub fn sym_inverse(a: &[Vec<Expr>]) -> (Vec<Vec<Expr>>, Expr) {
    let n = a.len();
    let d = sym_det(a);
    if n == 1 {
        return (vec![vec![Expr::one().div(&a[0][0])]], d);
    }
    let mut inv = vec![vec![Expr::zero(); n]; n];
    for (i, row) in inv.iter_mut().enumerate() {
        for (j, slot) in row.iter_mut().enumerate() {
            // (a^{-1})_ij = C_ji / det
            let c = sym_det(&minor(a, j, i));
            let c = if (i + j) % 2 == 0 { c } else { c.neg() };
            *slot = c.div(&d);
        }
    }
    (inv, d)
}
