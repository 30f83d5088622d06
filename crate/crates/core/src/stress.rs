//! Stress-energy tensors S and S₂, their divergence identities and the
//! homothety and conformal transformation laws of S₂.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{GeometryError, Result};
use crate::expr::Expr;
use crate::linalg::{self, Matrix};
use crate::map::SmoothMap;

/// Tolerance on |⟨τ, dφ(∂_i)⟩| for the conformal law's hypothesis.
pub const ORTHOGONALITY_TOL: f64 = 1e-9;

/// `S = e(φ)g − φ*h` and its divergence at `p`.
pub fn stress_s(phi: &SmoothMap, p: &[f64]) -> Result<(Matrix, Vec<f64>)> {
    let st = phi.stress(p)?;
    Ok((st.s, st.div_s))
}

/// `S₂` and its divergence at `p`.
pub fn stress_s2(phi: &SmoothMap, p: &[f64]) -> Result<(Matrix, Vec<f64>)> {
    let st = phi.stress(p)?;
    Ok((st.s2, st.div_s2))
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct DivResiduals {
    /// max |Div S(∂_i) + ⟨τ, dφ(∂_i)⟩|
    pub s: f64,
    /// max |Div S₂(∂_i) + ⟨τ₂, dφ(∂_i)⟩|
    pub s2: f64,
}

impl DivResiduals {
    pub fn max(&self) -> f64 {
        self.s.max(self.s2)
    }
}

/// Worst divergence-identity residuals over `points`.
pub fn check_div_identities(phi: &SmoothMap, points: &[Vec<f64>]) -> Result<DivResiduals> {
    let mut out = DivResiduals::default();
    for p in points {
        let st = phi.stress(p)?;
        out.s = out.s.max(st.s_residual());
        out.s2 = out.s2.max(st.s2_residual());
    }
    Ok(out)
}

/// S₂ under g and under t·g, at each point.
pub fn homothety_transform(
    phi: &SmoothMap,
    t: f64,
    points: &[Vec<f64>],
) -> Result<Vec<(Matrix, Matrix)>> {
    if !(t > 0.0) {
        return Err(GeometryError::Invalid(format!("homothety factor must be positive, got {t}")));
    }
    let scaled = phi.with_source(Arc::new(phi.source().scaled(t)?))?;
    points
        .iter()
        .map(|p| Ok((phi.stress(p)?.s2, scaled.stress(p)?.s2)))
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ConformalOutcome {
    pub original: Matrix,
    pub transformed: Matrix,
    /// e^{−2ρ(p)}
    pub factor: f64,
    /// Set when max |⟨τ, dφ(∂_i)⟩| exceeds the orthogonality tolerance.
    pub hypothesis_violation: Option<f64>,
}

impl ConformalOutcome {
    /// max |S̃₂ − e^{−2ρ}S₂| componentwise.
    pub fn law_residual(&self) -> f64 {
        self.original
            .iter()
            .flatten()
            .zip(self.transformed.iter().flatten())
            .map(|(a, b)| (b - self.factor * a).abs())
            .fold(0.0, f64::max)
    }
}

/// S₂ under g and under e^{2ρ}g for a surface map.
pub fn conformal_surface_transform(
    phi: &SmoothMap,
    rho: &Expr,
    points: &[Vec<f64>],
) -> Result<Vec<ConformalOutcome>> {
    let src = phi.source();
    if src.dim() != 2 {
        return Err(GeometryError::Dimension {
            what: "conformal surface law source dimension".into(),
            expected: 2,
            found: src.dim(),
        });
    }
    let conf = phi.with_source(Arc::new(src.conformal(rho)?))?;
    let coords = src.coord_refs();
    points
        .iter()
        .map(|p| {
            let st = phi.stress(p)?;
            let bind: Vec<(&str, f64)> = coords.iter().copied().zip(p.iter().copied()).collect();
            let r = rho.eval(&bind)?;
            let worst = st.tau_pairing.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            Ok(ConformalOutcome {
                original: st.s2,
                transformed: conf.stress(p)?.s2,
                factor: (-2.0 * r).exp(),
                hypothesis_violation: (worst > ORTHOGONALITY_TOL).then_some(worst),
            })
        })
        .collect()
}

/// Pointwise best fit of `A ≈ λ g` in the g-inner product.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LambdaFit {
    pub lambda: f64,
    /// ‖A − λg‖_g
    pub residual: f64,
}

pub fn lambda_fit(a: &Matrix, g: &Matrix, g_inv: &Matrix) -> LambdaFit {
    let m = a.len();
    let trace: f64 = (0..m)
        .flat_map(|i| (0..m).map(move |j| (i, j)))
        .map(|(i, j)| g_inv[i][j] * a[i][j])
        .sum();
    let lambda = trace / m as f64;
    let diff: Matrix = (0..m)
        .map(|i| (0..m).map(|j| a[i][j] - lambda * g[i][j]).collect())
        .collect();
    LambdaFit {
        lambda,
        residual: linalg::tensor_norm(g_inv, &diff),
    }
}
