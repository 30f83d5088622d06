//! Immersed submanifolds of flat R^n: second fundamental form, mean
//! curvature, the Gauss map pullback and the Willmore quantities.
//!
//! B is the normal part of the ambient Hessian of the embedding and
//! H = (1/m) trace_g B, so the tension field of the inclusion is mH.
//! All contractions go through g^{ij}; the only orthonormal frame is the
//! one built by the Plücker oracle.

use std::sync::{Arc, OnceLock};

use serde::Serialize;

use crate::error::{GeometryError, Result};
use crate::expr::{DiffCache, Expr, Tape};
use crate::linalg::{self, Matrix};
use crate::manifold::{ChartedManifold, Interval, SymTensorField};
use crate::map::SmoothMap;

/// Frame pivots below this make the Plücker oracle fail.
pub const FRAME_PIVOT_MIN: f64 = 1e-10;

/// Allowed tangential part of a variation field declared normal.
pub const NORMAL_TOL: f64 = 1e-8;

/// Allowed deviation between an explicit source metric and the induced one.
pub const INDUCED_METRIC_TOL: f64 = 1e-12;

/// Step of the central difference in the variation check.
pub const OMEGA_STEP: f64 = 1e-4;

/// Pointwise extrinsic data of an immersion.
#[derive(Debug, Clone, Serialize)]
pub struct SubmanifoldPointData {
    pub point: Vec<f64>,
    pub position: Vec<f64>,
    /// `jacobian[α][i]` = ∂_i X^α
    pub jacobian: Matrix,
    pub g: Matrix,
    pub g_inv: Matrix,
    /// `b[α][i][j]`
    pub b: Vec<Matrix>,
    pub h: Vec<f64>,
    pub h_dot_b: Matrix,
    pub pseudo_umbilic_residual: Matrix,
    pub s_traceless: Vec<Matrix>,
    /// `nabla_perp_h[α][i]`
    pub nabla_perp_h: Matrix,
    pub ricci: Matrix,
    pub scalar: f64,
    pub gauss_pullback: Matrix,
    pub gauss_energy: f64,
    pub s_g: Matrix,
    pub willmore_gradient: Vec<f64>,
}

impl SubmanifoldPointData {
    pub fn dim(&self) -> usize {
        self.g.len()
    }

    pub fn h_norm_sq(&self) -> f64 {
        linalg::dot(&self.h, &self.h)
    }

    /// Gaussian curvature r/2 (meaningful for surfaces).
    pub fn gaussian_curvature(&self) -> f64 {
        0.5 * self.scalar
    }

    pub fn sqrt_det_g(&self) -> f64 {
        linalg::det(&self.g).max(0.0).sqrt()
    }

    /// max |⟨B_ij, ∂_kX⟩|
    pub fn b_tangential_residual(&self) -> f64 {
        let (n, m) = (self.b.len(), self.dim());
        let mut worst: f64 = 0.0;
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    let s: f64 = (0..n).map(|a| self.b[a][i][j] * self.jacobian[a][k]).sum();
                    worst = worst.max(s.abs());
                }
            }
        }
        worst
    }

    /// max_α |g^{ij} S^α_ij|
    pub fn traceless_trace_residual(&self) -> f64 {
        self.s_traceless
            .iter()
            .map(|s| trace(&self.g_inv, s).abs())
            .fold(0.0, f64::max)
    }

    /// max_i |∇^⊥_i H|
    pub fn ruh_vilms_residual(&self) -> f64 {
        let m = self.dim();
        (0..m)
            .map(|i| {
                let col: Vec<f64> = self.nabla_perp_h.iter().map(|row| row[i]).collect();
                linalg::norm(&col)
            })
            .fold(0.0, f64::max)
    }

    /// |e(G) − (2|H|² − K)|, zero for surfaces by the Gauss equation.
    pub fn surface_energy_residual(&self) -> f64 {
        (self.gauss_energy - (2.0 * self.h_norm_sq() - self.gaussian_curvature())).abs()
    }

    /// ⟨V, B⟩ as an m×m matrix.
    pub fn v_dot_b(&self, v: &[f64]) -> Matrix {
        let m = self.dim();
        (0..m)
            .map(|i| (0..m).map(|j| (0..v.len()).map(|a| v[a] * self.b[a][i][j]).sum()).collect())
            .collect()
    }

    /// `Σ g^{ik} g^{jl} A_ij C_kl` for vector-valued C.
    fn pair_with(&self, a: &Matrix, c: &[Matrix]) -> Vec<f64> {
        let m = self.dim();
        let gi = &self.g_inv;
        c.iter()
            .map(|ca| {
                let mut s = 0.0;
                for i in 0..m {
                    for j in 0..m {
                        for k in 0..m {
                            for l in 0..m {
                                s += gi[i][k] * gi[j][l] * a[i][j] * ca[k][l];
                            }
                        }
                    }
                }
                s
            })
            .collect()
    }

    /// Residuals of the two algebraic chains behind the Willmore equation.
    ///
    /// First: ⟨|H|²g − H.B, −2V.B⟩ = ⟨−4|H|²H + 2⟨H.B,B⟩, V⟩.
    /// Second: ⟨−|H|²g + H.B, B⟩ = ⟨H, tr S⟩H + |H|² tr S + Σ⟨H,S_ij⟩S^{ij}
    /// for B = H⊗g + S.
    pub fn weiner_residuals(&self, v: &[f64]) -> (f64, f64) {
        let m = self.dim();
        let omega: Matrix = self.v_dot_b(v).iter().map(|r| r.iter().map(|x| -2.0 * x).collect()).collect();
        let lhs = inner_g(&self.g_inv, &self.pseudo_umbilic_residual, &omega);
        let rhs = linalg::dot(&self.willmore_gradient, v);
        let r1 = (lhs - rhs).abs();

        let h2 = self.h_norm_sq();
        let a: Matrix = (0..m)
            .map(|i| (0..m).map(|j| self.h_dot_b[i][j] - h2 * self.g[i][j]).collect())
            .collect();
        let left = self.pair_with(&a, &self.b);
        let tr_s: Vec<f64> = self.s_traceless.iter().map(|s| trace(&self.g_inv, s)).collect();
        let h_dot_s: Matrix = (0..m)
            .map(|i| {
                (0..m)
                    .map(|j| (0..self.h.len()).map(|al| self.h[al] * self.s_traceless[al][i][j]).sum())
                    .collect()
            })
            .collect();
        let tail = self.pair_with(&h_dot_s, &self.s_traceless);
        let h_tr = linalg::dot(&self.h, &tr_s);
        let diff: Vec<f64> = (0..self.h.len())
            .map(|al| left[al] - h_tr * self.h[al] - h2 * tr_s[al] - tail[al])
            .collect();
        (r1, linalg::norm(&diff))
    }
}

fn trace(g_inv: &Matrix, a: &Matrix) -> f64 {
    let m = a.len();
    (0..m)
        .flat_map(|i| (0..m).map(move |j| (i, j)))
        .map(|(i, j)| g_inv[i][j] * a[i][j])
        .sum()
}

/// g^{ik} g^{jl} A_ij C_kl
pub fn inner_g(g_inv: &Matrix, a: &Matrix, c: &Matrix) -> f64 {
    let m = a.len();
    let mut s = 0.0;
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                for l in 0..m {
                    s += g_inv[i][k] * g_inv[j][l] * a[i][j] * c[k][l];
                }
            }
        }
    }
    s
}

/// Residuals of the four surface conditions, each ‖·‖_g.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EquivalenceChain {
    /// ‖S^G‖
    pub s_g: f64,
    /// ‖G*g_can − (trace/m) g‖
    pub gauss_conformal: f64,
    /// ‖|H|²g − H.B‖
    pub pseudo_umbilic: f64,
    /// ‖S₂ − ½|τ|²g‖
    pub s2_half_tau: f64,
}

impl EquivalenceChain {
    pub fn as_array(&self) -> [f64; 4] {
        [self.s_g, self.gauss_conformal, self.pseudo_umbilic, self.s2_half_tau]
    }
}

/// Both sides of the variation formula for the metric.
#[derive(Debug, Clone, Serialize)]
pub struct OmegaCheck {
    pub fd_omega: Matrix,
    pub formula_omega: Matrix,
    pub tangential: f64,
}

impl OmegaCheck {
    pub fn residual(&self) -> f64 {
        self.fd_omega
            .iter()
            .flatten()
            .zip(self.formula_omega.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

struct Fields {
    tape: Tape,
    s_g: SymTensorField,
}

/// A Riemannian immersion M^m → R^n.
pub struct Immersion {
    name: String,
    source: Arc<ChartedManifold>,
    embedding: Vec<Expr>,
    map: SmoothMap,
    fields: OnceLock<Fields>,
    div_tape: OnceLock<Tape>,
    pluecker: OnceLock<Result<Tape, GeometryError>>,
}

impl std::fmt::Debug for Immersion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Immersion")
            .field("name", &self.name)
            .field("source", &self.source.name())
            .field("embedding", &self.embedding)
            .finish()
    }
}

impl Immersion {
    /// Source metric induced from the embedding.
    pub fn new(
        name: impl Into<String>,
        coords: Vec<String>,
        domain: Vec<Interval>,
        embedding: Vec<Expr>,
    ) -> Result<Self> {
        let name = name.into();
        let source = ChartedManifold::induced(name.clone(), coords, domain, &embedding)?;
        Self::build(name, Arc::new(source), embedding)
    }

    /// Explicit source metric; it must match the induced metric on an
    /// interior grid.
    pub fn with_metric(
        name: impl Into<String>,
        source: Arc<ChartedManifold>,
        embedding: Vec<Expr>,
    ) -> Result<Self> {
        let name = name.into();
        let induced = ChartedManifold::induced(
            "induced",
            source.coords().to_vec(),
            source.domain().to_vec(),
            &embedding,
        )?;
        let per_axis = match source.dim() {
            1 | 2 => 5,
            3 => 3,
            _ => 2,
        };
        for p in source.interior_grid(per_axis) {
            let a = source.metric_at(&p)?;
            let b = induced.metric_at(&p)?;
            let scale = linalg::max_abs(&a).max(1.0);
            let dev = a
                .iter()
                .flatten()
                .zip(b.iter().flatten())
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            if dev > INDUCED_METRIC_TOL * scale {
                return Err(GeometryError::NotRiemannianImmersion { point: p, deviation: dev });
            }
        }
        Self::build(name, source, embedding)
    }

    fn build(name: String, source: Arc<ChartedManifold>, embedding: Vec<Expr>) -> Result<Self> {
        let n = embedding.len();
        let target = Arc::new(ChartedManifold::standard_euclidean(n));
        let map = SmoothMap::new(name.clone(), source.clone(), target, embedding.clone())?;
        Ok(Self {
            name,
            source,
            embedding,
            map,
            fields: OnceLock::new(),
            div_tape: OnceLock::new(),
            pluecker: OnceLock::new(),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn source(&self) -> &Arc<ChartedManifold> {
        &self.source
    }

    pub fn embedding(&self) -> &[Expr] {
        &self.embedding
    }

    pub fn dim(&self) -> usize {
        self.source.dim()
    }

    pub fn ambient_dim(&self) -> usize {
        self.embedding.len()
    }

    /// The inclusion as a map into flat R^n.
    pub fn as_map(&self) -> &SmoothMap {
        &self.map
    }

    fn jacobian_exprs(&self, cache: &mut DiffCache) -> Vec<Vec<Expr>> {
        let coords = self.source.coords();
        self.embedding
            .iter()
            .map(|x| coords.iter().map(|c| cache.diff(x, c)).collect())
            .collect()
    }

    /// Symbolic tangent projector J g⁻¹ Jᵀ.
    fn projector_exprs(&self, jac: &[Vec<Expr>]) -> Vec<Vec<Expr>> {
        let (n, m) = (self.ambient_dim(), self.dim());
        let gi = self.source.inverse_metric_exprs();
        // J g⁻¹, n×m
        let jg: Vec<Vec<Expr>> = (0..n)
            .map(|a| {
                (0..m)
                    .map(|j| Expr::sum((0..m).filter(|&k| !gi[k][j].is_zero()).map(|k| jac[a][k].mul(&gi[k][j]))))
                    .collect()
            })
            .collect();
        (0..n)
            .map(|a| {
                (0..n)
                    .map(|b| Expr::sum((0..m).map(|j| jg[a][j].mul(&jac[b][j]))))
                    .collect()
            })
            .collect()
    }

    /// Normal part (I − P)W of an ambient vector field.
    pub fn normal_part(&self, w: &[Expr]) -> Result<Vec<Expr>> {
        let n = self.ambient_dim();
        if w.len() != n {
            return Err(GeometryError::Dimension {
                what: "ambient vector field".into(),
                expected: n,
                found: w.len(),
            });
        }
        let mut cache = DiffCache::new();
        let jac = self.jacobian_exprs(&mut cache);
        let p = self.projector_exprs(&jac);
        Ok((0..n)
            .map(|a| w[a].sub(&Expr::sum((0..n).map(|b| p[a][b].mul(&w[b])))))
            .collect())
    }

    fn fields(&self) -> &Fields {
        self.fields.get_or_init(|| {
            let (n, m) = (self.ambient_dim(), self.dim());
            let coords = self.source.coords();
            let mut cache = DiffCache::new();
            let jac = self.jacobian_exprs(&mut cache);
            let proj = self.projector_exprs(&jac);
            let gi = self.source.inverse_metric_exprs().to_vec();
            let g = self.source.metric().components().to_vec();
            // ambient Hessian, then its normal part
            let hess: Vec<Vec<Vec<Expr>>> = (0..n)
                .map(|a| {
                    (0..m)
                        .map(|i| (0..m).map(|j| cache.diff(&jac[a][i], &coords[j])).collect())
                        .collect()
                })
                .collect();
            let mut b = vec![vec![vec![Expr::zero(); m]; m]; n];
            for i in 0..m {
                for j in i..m {
                    for a in 0..n {
                        let t = Expr::sum((0..n).map(|c| proj[a][c].mul(&hess[c][i][j])));
                        let e = hess[a][i][j].sub(&t);
                        b[a][i][j] = e.clone();
                        b[a][j][i] = e;
                    }
                }
            }
            let inv_m = 1.0 / m as f64;
            let h: Vec<Expr> = (0..n)
                .map(|a| {
                    Expr::sum(
                        (0..m)
                            .flat_map(|i| (0..m).map(move |j| (i, j)))
                            .filter(|&(i, j)| !gi[i][j].is_zero())
                            .map(|(i, j)| gi[i][j].mul(&b[a][i][j])),
                    )
                    .scale(inv_m)
                })
                .collect();
            let dh: Vec<Vec<Expr>> = h
                .iter()
                .map(|ha| coords.iter().map(|c| cache.diff(ha, c)).collect())
                .collect();
            let ricci = self.source.ricci_field();
            let scalar = self.source.scalar_curvature_expr();
            // G* = m H.B − Ric, e(G) = ½ g^{ij} G*_ij, S^G = e(G) g − G*
            let mut gstar = vec![vec![Expr::zero(); m]; m];
            for i in 0..m {
                for j in i..m {
                    let hb = Expr::sum((0..n).map(|a| h[a].mul(&b[a][i][j])));
                    gstar[i][j] = hb.scale(m as f64).sub(ricci.get(i, j));
                    gstar[j][i] = gstar[i][j].clone();
                }
            }
            let e_g = Expr::sum(
                (0..m)
                    .flat_map(|i| (0..m).map(move |j| (i, j)))
                    .filter(|&(i, j)| !gi[i][j].is_zero())
                    .map(|(i, j)| gi[i][j].mul(&gstar[i][j])),
            )
            .scale(0.5);
            let s_g = SymTensorField::from_matrix(
                (0..m)
                    .map(|i| (0..m).map(|j| e_g.mul(&g[i][j]).sub(&gstar[i][j])).collect())
                    .collect(),
            );

            let mut outs: Vec<Expr> = self.embedding.clone();
            outs.extend(jac.iter().flatten().cloned());
            outs.extend(g.iter().flatten().cloned());
            outs.extend(gi.iter().flatten().cloned());
            outs.extend(b.iter().flatten().flatten().cloned());
            outs.extend(h.iter().cloned());
            outs.extend(dh.iter().flatten().cloned());
            outs.extend(ricci.components().iter().flatten().cloned());
            outs.push(scalar);
            let tape = Tape::compile(&outs, &self.source.coord_refs()).expect("fields use chart coordinates");
            Fields { tape, s_g }
        })
    }

    pub fn point_data(&self, p: &[f64]) -> Result<SubmanifoldPointData> {
        self.source.check_point(p)?;
        let (n, m) = (self.ambient_dim(), self.dim());
        let v = self.fields().tape.eval(p).map_err(|e| self.rank_error(p).unwrap_or(e.into()))?;
        let mut it = v.into_iter();
        let mut take = |k: usize| -> Vec<f64> { it.by_ref().take(k).collect() };
        let rows = |flat: Vec<f64>, c: usize| -> Matrix { flat.chunks(c).map(|r| r.to_vec()).collect() };
        let position = take(n);
        let jacobian = rows(take(n * m), m);
        let g = rows(take(m * m), m);
        let g_inv = rows(take(m * m), m);
        let b: Vec<Matrix> = take(n * m * m).chunks(m * m).map(|c| rows(c.to_vec(), m)).collect();
        let h = take(n);
        let dh = rows(take(n * m), m);
        let ricci = rows(take(m * m), m);
        let scalar = take(1)[0];

        // rank check on the induced metric J^T J
        let jtj = linalg::matmul(&linalg::transpose(&jacobian), &jacobian);
        let det = linalg::det(&jtj);
        if det <= crate::manifold::DEGENERATE_DET {
            return Err(GeometryError::ImmersionRank { point: p.to_vec(), det });
        }

        let h2 = linalg::dot(&h, &h);
        let h_dot_b: Matrix = (0..m)
            .map(|i| (0..m).map(|j| (0..n).map(|a| h[a] * b[a][i][j]).sum()).collect())
            .collect();
        let pseudo_umbilic_residual: Matrix = (0..m)
            .map(|i| (0..m).map(|j| h2 * g[i][j] - h_dot_b[i][j]).collect())
            .collect();
        let s_traceless: Vec<Matrix> = (0..n)
            .map(|a| (0..m).map(|i| (0..m).map(|j| b[a][i][j] - h[a] * g[i][j]).collect()).collect())
            .collect();
        // numeric projector J g⁻¹ Jᵀ
        let jg = linalg::matmul(&jacobian, &g_inv);
        let proj = linalg::matmul(&jg, &linalg::transpose(&jacobian));
        let nabla_perp_h: Matrix = (0..n)
            .map(|a| {
                (0..m)
                    .map(|i| dh[a][i] - (0..n).map(|c| proj[a][c] * dh[c][i]).sum::<f64>())
                    .collect()
            })
            .collect();
        let mf = m as f64;
        let gauss_pullback: Matrix = (0..m)
            .map(|i| (0..m).map(|j| mf * h_dot_b[i][j] - ricci[i][j]).collect())
            .collect();
        let gauss_energy = 0.5 * trace(&g_inv, &gauss_pullback);
        let s_g: Matrix = (0..m)
            .map(|i| (0..m).map(|j| gauss_energy * g[i][j] - gauss_pullback[i][j]).collect())
            .collect();
        // −4|H|²H + 2 g^{ik} g^{jl} ⟨H,B_ij⟩ B_kl
        let mut willmore_gradient: Vec<f64> = h.iter().map(|x| -4.0 * h2 * x).collect();
        for (a, w) in willmore_gradient.iter_mut().enumerate() {
            *w += 2.0 * inner_g(&g_inv, &h_dot_b, &b[a]);
        }
        Ok(SubmanifoldPointData {
            point: p.to_vec(),
            position,
            jacobian,
            g,
            g_inv,
            b,
            h,
            h_dot_b,
            pseudo_umbilic_residual,
            s_traceless,
            nabla_perp_h,
            ricci,
            scalar,
            gauss_pullback,
            gauss_energy,
            s_g,
            willmore_gradient,
        })
    }

    fn rank_error(&self, p: &[f64]) -> Option<GeometryError> {
        let jt = Tape::compile(
            &self.jacobian_exprs(&mut DiffCache::new()).concat(),
            &self.source.coord_refs(),
        )
        .ok()?;
        let m = self.dim();
        let j: Matrix = jt.eval(p).ok()?.chunks(m).map(|c| c.to_vec()).collect();
        let det = linalg::det(&linalg::matmul(&linalg::transpose(&j), &j));
        (det <= crate::manifold::DEGENERATE_DET).then(|| GeometryError::ImmersionRank { point: p.to_vec(), det })
    }

    /// B, H, ⟨H,B⟩, |H|²g − H.B and the trace-less part of B at `p`.
    pub fn fundamental_forms(&self, p: &[f64]) -> Result<SubmanifoldPointData> {
        self.point_data(p)
    }

    /// (G*g_can, e(G), S^G) at `p`.
    pub fn gauss_formula(&self, p: &[f64]) -> Result<(Matrix, f64, Matrix)> {
        let d = self.point_data(p)?;
        Ok((d.gauss_pullback, d.gauss_energy, d.s_g))
    }

    pub fn ruh_vilms_residual(&self, p: &[f64]) -> Result<f64> {
        Ok(self.point_data(p)?.ruh_vilms_residual())
    }

    pub fn willmore_gradient(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.require_surface("Willmore gradient")?;
        Ok(self.point_data(p)?.willmore_gradient)
    }

    fn require_surface(&self, what: &str) -> Result<()> {
        if self.dim() != 2 {
            return Err(GeometryError::Dimension {
                what: format!("{what} source dimension"),
                expected: 2,
                found: self.dim(),
            });
        }
        Ok(())
    }

    /// Pullback of the Plücker inner product under the wedge of a
    /// Gram–Schmidt frame, at `p`.
    pub fn gauss_pluecker_oracle(&self, p: &[f64]) -> Result<Matrix> {
        let tape = self
            .pluecker
            .get_or_init(|| self.pluecker_tape(0.0))
            .as_ref()
            .map_err(Clone::clone)?;
        self.eval_pluecker(tape, p)
    }

    /// Same oracle with the initial coordinate frame rotated by `angle` in
    /// its first two vectors.
    pub fn gauss_pluecker_oracle_rotated(&self, angle: f64, points: &[Vec<f64>]) -> Result<Vec<Matrix>> {
        let tape = self.pluecker_tape(angle)?;
        points.iter().map(|p| self.eval_pluecker(&tape, p)).collect()
    }

    fn eval_pluecker(&self, tape: &Tape, p: &[f64]) -> Result<Matrix> {
        self.source.check_point(p)?;
        let m = self.dim();
        let v = tape.eval(p)?;
        let (pivots, rest) = v.split_at(m);
        if let Some(&pivot) = pivots.iter().find(|x| !(x.abs() >= FRAME_PIVOT_MIN)) {
            return Err(GeometryError::FrameDegenerate { point: p.to_vec(), pivot });
        }
        Ok(rest.chunks(m).map(|c| c.to_vec()).collect())
    }

    fn pluecker_tape(&self, angle: f64) -> Result<Tape> {
        let (n, m) = (self.ambient_dim(), self.dim());
        let coords = self.source.coords();
        let mut cache = DiffCache::new();
        let jac = self.jacobian_exprs(&mut cache);
        let mut frame: Vec<Vec<Expr>> = (0..m).map(|i| (0..n).map(|a| jac[a][i].clone()).collect()).collect();
        if angle != 0.0 && m >= 2 {
            let (c, s) = (angle.cos(), angle.sin());
            let f0: Vec<Expr> = (0..n).map(|a| frame[0][a].scale(c).add(&frame[1][a].scale(s))).collect();
            let f1: Vec<Expr> = (0..n).map(|a| frame[1][a].scale(c).sub(&frame[0][a].scale(s))).collect();
            frame[0] = f0;
            frame[1] = f1;
        }
        let mut ortho: Vec<Vec<Expr>> = Vec::with_capacity(m);
        let mut pivots = Vec::with_capacity(m);
        for v in frame {
            let mut w = v.clone();
            for e in &ortho {
                let c = Expr::sum(v.iter().zip(e).map(|(x, y)| x.mul(y)));
                w = w.iter().zip(e).map(|(x, y)| x.sub(&c.mul(y))).collect();
            }
            let len = Expr::sum(w.iter().map(|x| x.mul(x))).sqrt();
            pivots.push(len.clone());
            ortho.push(w.iter().map(|x| x.div(&len)).collect());
        }
        // Plücker coordinates: m×m minors over increasing row subsets
        let mut wedge = Vec::new();
        for rows in subsets(n, m) {
            let minor: Vec<Vec<Expr>> = rows
                .iter()
                .map(|&a| (0..m).map(|k| ortho[k][a].clone()).collect())
                .collect();
            wedge.push(linalg::sym_det(&minor));
        }
        let dw: Vec<Vec<Expr>> = wedge
            .iter()
            .map(|w| coords.iter().map(|c| cache.diff(w, c)).collect())
            .collect();
        let mut outs = pivots;
        for i in 0..m {
            for j in 0..m {
                outs.push(Expr::sum(dw.iter().map(|d| d[i].mul(&d[j]))));
            }
        }
        Ok(Tape::compile(&outs, &self.source.coord_refs())?)
    }

    /// Finite-difference and closed-form first variation of the metric
    /// along a normal field `v`.
    pub fn variation_omega_check(&self, v: &[Expr], p: &[f64]) -> Result<OmegaCheck> {
        let (n, m) = (self.ambient_dim(), self.dim());
        if v.len() != n {
            return Err(GeometryError::Dimension {
                what: "variation field".into(),
                expected: n,
                found: v.len(),
            });
        }
        let d = self.point_data(p)?;
        let vp = self.eval_vector(v, p)?;
        let (vn, tangential) = project_normal(&d, &vp);
        if tangential > NORMAL_TOL * linalg::norm(&vp).max(1.0) {
            return Err(GeometryError::NotNormal { point: p.to_vec(), tangential });
        }
        let coords = self.source.coords();
        let mut cache = DiffCache::new();
        let dv: Vec<Expr> = v
            .iter()
            .flat_map(|x| coords.iter().map(|c| cache.diff(x, c)).collect::<Vec<_>>())
            .collect();
        let tape = Tape::compile(&dv, &self.source.coord_refs())?;
        let dvp: Matrix = tape.eval(p)?.chunks(m).map(|c| c.to_vec()).collect();
        let metric_at = |t: f64| -> Matrix {
            (0..m)
                .map(|i| {
                    (0..m)
                        .map(|j| {
                            (0..n)
                                .map(|a| (d.jacobian[a][i] + t * dvp[a][i]) * (d.jacobian[a][j] + t * dvp[a][j]))
                                .sum()
                        })
                        .collect()
                })
                .collect()
        };
        let (gp, gm) = (metric_at(OMEGA_STEP), metric_at(-OMEGA_STEP));
        let fd_omega = (0..m)
            .map(|i| (0..m).map(|j| (gp[i][j] - gm[i][j]) / (2.0 * OMEGA_STEP)).collect())
            .collect();
        let formula_omega = d
            .v_dot_b(&vn)
            .into_iter()
            .map(|r| r.into_iter().map(|x| -2.0 * x).collect())
            .collect();
        Ok(OmegaCheck {
            fd_omega,
            formula_omega,
            tangential,
        })
    }

    /// Weiner chain residuals for a normal field `v` at `p`.
    pub fn weiner_algebra_check(&self, v: &[Expr], p: &[f64]) -> Result<(f64, f64)> {
        self.require_surface("Weiner chain")?;
        let d = self.point_data(p)?;
        let vp = self.eval_vector(v, p)?;
        let (vn, tangential) = project_normal(&d, &vp);
        if tangential > NORMAL_TOL * linalg::norm(&vp).max(1.0) {
            return Err(GeometryError::NotNormal { point: p.to_vec(), tangential });
        }
        Ok(d.weiner_residuals(&vn))
    }

    fn eval_vector(&self, v: &[Expr], p: &[f64]) -> Result<Vec<f64>> {
        Ok(Tape::compile(v, &self.source.coord_refs())?.eval(p)?)
    }

    fn div_tape(&self) -> &Tape {
        self.div_tape.get_or_init(|| {
            let f = self.fields();
            let mf = self.map.fields();
            let mut cache = DiffCache::new();
            let div_sg = self.source.divergence_exprs(&f.s_g, &mut cache);
            let d_tau_sq: Vec<Expr> = self
                .source
                .coords()
                .iter()
                .map(|c| cache.diff(&mf.tau_sq, c))
                .collect();
            let mut outs = div_sg;
            outs.extend(mf.div_s2.iter().cloned());
            outs.extend(d_tau_sq);
            outs.extend(self.source.inverse_metric_exprs().iter().flatten().cloned());
            Tape::compile(&outs, &self.source.coord_refs()).expect("fields use chart coordinates")
        })
    }

    /// (Div S^G, Div S₂, d|τ|²) at `p`.
    pub fn divergences(&self, p: &[f64]) -> Result<DivergenceData> {
        self.source.check_point(p)?;
        let m = self.dim();
        let v = self.div_tape().eval(p)?;
        Ok(DivergenceData {
            div_s_g: v[..m].to_vec(),
            div_s2: v[m..2 * m].to_vec(),
            d_tau_sq: v[2 * m..3 * m].to_vec(),
            g_inv: v[3 * m..].chunks(m).map(|c| c.to_vec()).collect(),
        })
    }

    /// ‖Div S^G + ½ Div S₂ − ¼ d|τ|²‖ at `p`.
    pub fn divergence_relation_residual(&self, p: &[f64]) -> Result<f64> {
        Ok(self.divergences(p)?.relation_residual())
    }

    /// The four surface conditions at `p`.
    pub fn equivalence_chain(&self, p: &[f64]) -> Result<EquivalenceChain> {
        let d = self.point_data(p)?;
        let (md, st) = self.map.point_data_and_stress(p)?;
        let m = self.dim();
        let mf = m as f64;
        let gp = &d.gauss_pullback;
        let tr = trace(&d.g_inv, gp) / mf;
        let conf: Matrix = (0..m).map(|i| (0..m).map(|j| gp[i][j] - tr * d.g[i][j]).collect()).collect();
        let half_tau = 0.5 * md.tau_norm().powi(2);
        let s2: Matrix = (0..m)
            .map(|i| (0..m).map(|j| st.s2[i][j] - half_tau * d.g[i][j]).collect())
            .collect();
        Ok(EquivalenceChain {
            s_g: linalg::tensor_norm(&d.g_inv, &d.s_g),
            gauss_conformal: linalg::tensor_norm(&d.g_inv, &conf),
            pseudo_umbilic: linalg::tensor_norm(&d.g_inv, &d.pseudo_umbilic_residual),
            s2_half_tau: linalg::tensor_norm(&d.g_inv, &s2),
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DivergenceData {
    pub div_s_g: Vec<f64>,
    pub div_s2: Vec<f64>,
    pub d_tau_sq: Vec<f64>,
    #[serde(skip)]
    g_inv: Matrix,
}

impl DivergenceData {
    pub fn relation_residual(&self) -> f64 {
        let w: Vec<f64> = (0..self.div_s_g.len())
            .map(|i| self.div_s_g[i] + 0.5 * self.div_s2[i] - 0.25 * self.d_tau_sq[i])
            .collect();
        linalg::covector_norm(&self.g_inv, &w)
    }

    pub fn div_s_g_norm(&self) -> f64 {
        linalg::covector_norm(&self.g_inv, &self.div_s_g)
    }

    pub fn div_s2_norm(&self) -> f64 {
        linalg::covector_norm(&self.g_inv, &self.div_s2)
    }
}

/// Normal part of `v` and the norm of its tangential part.
fn project_normal(d: &SubmanifoldPointData, v: &[f64]) -> (Vec<f64>, f64) {
    let n = v.len();
    let jg = linalg::matmul(&d.jacobian, &d.g_inv);
    let proj = linalg::matmul(&jg, &linalg::transpose(&d.jacobian));
    let tan: Vec<f64> = (0..n).map(|a| (0..n).map(|b| proj[a][b] * v[b]).sum()).collect();
    let normal = v.iter().zip(&tan).map(|(x, t)| x - t).collect();
    (normal, linalg::norm(&tan))
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}
