//! Smooth maps between charted manifolds.
//!
//! Every field that is later differentiated (τ, ∇τ, S, S₂) is kept symbolic.
//! The pullback-bundle connection is
//! `(∇^φ_i σ)^α = ∂_i σ^α + ^NΓ^α_βγ(φ) σ^β ∂_iφ^γ`,
//! the rough Laplacian follows `Δσ = −trace ∇dσ`, and
//! `τ₂ = −Δτ − trace R^N(dφ·, τ)dφ·`.

use std::sync::{Arc, OnceLock};

use serde::Serialize;

use crate::error::{GeometryError, Result};
use crate::expr::{DiffCache, Expr, Tape};
use crate::linalg::Matrix;
use crate::manifold::{ChartedManifold, SymTensorField};

/// First-order quantities of a map at a point.
#[derive(Debug, Clone, Serialize)]
pub struct FirstOrder {
    /// `dphi[α][i]` = ∂_i φ^α
    pub dphi: Matrix,
    pub energy_density: f64,
    pub pullback_metric: Matrix,
}

/// Pointwise data of a map up to the bitension field.
#[derive(Debug, Clone, Serialize)]
pub struct MapPointData {
    pub point: Vec<f64>,
    pub image: Vec<f64>,
    pub dphi: Matrix,
    pub energy_density: f64,
    pub pullback_metric: Matrix,
    /// `nabla_dphi[α][i][j]` = (∇dφ)^α_ij
    pub nabla_dphi: Vec<Matrix>,
    pub tau: Vec<f64>,
    /// `nabla_tau[α][i]` = (∇^φ_i τ)^α
    pub nabla_tau: Matrix,
    pub tau2: Vec<f64>,
    /// Target metric at φ(p), used for norms of target vectors.
    pub target_metric: Matrix,
    pub source_metric: Matrix,
    pub source_metric_inv: Matrix,
}

impl MapPointData {
    /// Norm of a target vector at φ(p).
    pub fn target_norm(&self, v: &[f64]) -> f64 {
        self.target_inner(v, v).max(0.0).sqrt()
    }

    pub fn target_inner(&self, u: &[f64], v: &[f64]) -> f64 {
        let h = &self.target_metric;
        let mut s = 0.0;
        for a in 0..u.len() {
            for b in 0..v.len() {
                s += h[a][b] * u[a] * v[b];
            }
        }
        s
    }

    pub fn tau_norm(&self) -> f64 {
        self.target_norm(&self.tau)
    }

    pub fn tau2_norm(&self) -> f64 {
        self.target_norm(&self.tau2)
    }

    /// max_{α,i,j} |(∇dφ)^α_ij − (∇dφ)^α_ji|
    pub fn hessian_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for h in &self.nabla_dphi {
            for i in 0..h.len() {
                for j in 0..h.len() {
                    worst = worst.max((h[i][j] - h[j][i]).abs());
                }
            }
        }
        worst
    }

    /// |τ − g^{ij}(∇dφ)_ij|, recomputed from the returned Hessian.
    pub fn trace_residual(&self) -> f64 {
        let gi = &self.source_metric_inv;
        self.tau
            .iter()
            .zip(&self.nabla_dphi)
            .map(|(t, h)| {
                let mut tr = 0.0;
                for i in 0..h.len() {
                    for j in 0..h.len() {
                        tr += gi[i][j] * h[i][j];
                    }
                }
                (t - tr).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Stress-energy tensors and the divergence identities' two sides.
#[derive(Debug, Clone, Serialize)]
pub struct StressTensors {
    pub s: Matrix,
    pub s2: Matrix,
    pub div_s: Vec<f64>,
    pub div_s2: Vec<f64>,
    /// ⟨τ, dφ(∂_i)⟩
    pub tau_pairing: Vec<f64>,
    /// ⟨τ₂, dφ(∂_i)⟩
    pub tau2_pairing: Vec<f64>,
}

impl StressTensors {
    /// max_i |Div S(∂_i) + ⟨τ, dφ(∂_i)⟩|
    pub fn s_residual(&self) -> f64 {
        self.div_s
            .iter()
            .zip(&self.tau_pairing)
            .map(|(d, p)| (d + p).abs())
            .fold(0.0, f64::max)
    }

    /// max_i |Div S₂(∂_i) + ⟨τ₂, dφ(∂_i)⟩|
    pub fn s2_residual(&self) -> f64 {
        self.div_s2
            .iter()
            .zip(&self.tau2_pairing)
            .map(|(d, p)| (d + p).abs())
            .fold(0.0, f64::max)
    }
}

/// Symbolic fields of a map; built once and shared.
pub(crate) struct MapFields {
    pub dphi: Vec<Vec<Expr>>,
    pub energy: Expr,
    pub pullback: Vec<Vec<Expr>>,
    pub nabla_dphi: Vec<Vec<Vec<Expr>>>,
    pub tau: Vec<Expr>,
    pub nabla_tau: Vec<Vec<Expr>>,
    pub tau2: Vec<Expr>,
    pub target_metric: Vec<Vec<Expr>>,
    pub tau_sq: Expr,
    pub stress: SymTensorField,
    pub stress2: SymTensorField,
    pub div_s: Vec<Expr>,
    pub div_s2: Vec<Expr>,
    pub tau_pairing: Vec<Expr>,
    pub tau2_pairing: Vec<Expr>,
}

/// A smooth map φ: (M, g) → (N, h) given by target-coordinate components.
pub struct SmoothMap {
    name: String,
    source: Arc<ChartedManifold>,
    target: Arc<ChartedManifold>,
    components: Vec<Expr>,
    fields: OnceLock<MapFields>,
    tape: OnceLock<Tape>,
}

impl std::fmt::Debug for SmoothMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SmoothMap")
            .field("name", &self.name)
            .field("source", &self.source.name())
            .field("target", &self.target.name())
            .field("components", &self.components)
            .finish()
    }
}

// Layout of the compiled tape: components, then the blocks in this order.
struct Layout {
    m: usize,
    n: usize,
}

impl SmoothMap {
    pub fn new(
        name: impl Into<String>,
        source: Arc<ChartedManifold>,
        target: Arc<ChartedManifold>,
        components: Vec<Expr>,
    ) -> Result<Self> {
        let name = name.into();
        if components.len() != target.dim() {
            return Err(GeometryError::Dimension {
                what: format!("components of map `{name}`"),
                expected: target.dim(),
                found: components.len(),
            });
        }
        let coords = source.coord_refs();
        for c in &components {
            if let Some(v) = c.variables().into_iter().find(|v| !coords.contains(&v.as_str())) {
                return Err(GeometryError::Invalid(format!(
                    "map `{name}` uses `{v}`, which is not a coordinate of `{}`",
                    source.name()
                )));
            }
        }
        Ok(Self {
            name,
            source,
            target,
            components,
            fields: OnceLock::new(),
            tape: OnceLock::new(),
        })
    }

    /// The identity map of a manifold.
    pub fn identity(manifold: Arc<ChartedManifold>) -> Self {
        let comps = manifold.coords().iter().map(|c| Expr::var(c)).collect();
        Self::new(format!("id_{}", manifold.name()), manifold.clone(), manifold, comps)
            .expect("identity components are coordinates")
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &SmoothMap) -> Result<SmoothMap> {
        if inner.target.dim() != self.source.dim() {
            return Err(GeometryError::Dimension {
                what: "composition".into(),
                expected: self.source.dim(),
                found: inner.target.dim(),
            });
        }
        let bindings: Vec<(&str, Expr)> = self
            .source
            .coords()
            .iter()
            .map(String::as_str)
            .zip(inner.components.iter().cloned())
            .collect();
        let comps = Expr::substitute_all(&self.components, &bindings);
        SmoothMap::new(
            format!("{}∘{}", self.name, inner.name),
            inner.source.clone(),
            self.target.clone(),
            comps,
        )
    }

    /// Same components over a different source metric on the same chart.
    pub fn with_source(&self, source: Arc<ChartedManifold>) -> Result<SmoothMap> {
        if source.coords() != self.source.coords() {
            return Err(GeometryError::Invalid("source chart mismatch".into()));
        }
        SmoothMap::new(self.name.clone(), source, self.target.clone(), self.components.clone())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn source(&self) -> &Arc<ChartedManifold> {
        &self.source
    }

    pub fn target(&self) -> &Arc<ChartedManifold> {
        &self.target
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub(crate) fn fields(&self) -> &MapFields {
        self.fields.get_or_init(|| build_fields(self))
    }

    /// Symbolic tension field components.
    pub fn tension_exprs(&self) -> &[Expr] {
        &self.fields().tau
    }

    /// Symbolic biharmonic stress-energy tensor.
    pub fn stress2_field(&self) -> &SymTensorField {
        &self.fields().stress2
    }

    /// Symbolic |τ|².
    pub fn tau_sq_expr(&self) -> &Expr {
        &self.fields().tau_sq
    }

    fn layout(&self) -> Layout {
        Layout {
            m: self.source.dim(),
            n: self.target.dim(),
        }
    }

    fn tape(&self) -> &Tape {
        self.tape.get_or_init(|| {
            let f = self.fields();
            let mut outs: Vec<Expr> = self.components.clone();
            outs.extend(f.dphi.iter().flatten().cloned());
            outs.push(f.energy.clone());
            outs.extend(f.pullback.iter().flatten().cloned());
            outs.extend(f.nabla_dphi.iter().flatten().flatten().cloned());
            outs.extend(f.tau.iter().cloned());
            outs.extend(f.nabla_tau.iter().flatten().cloned());
            outs.extend(f.tau2.iter().cloned());
            outs.extend(f.target_metric.iter().flatten().cloned());
            outs.extend(self.source.metric().components().iter().flatten().cloned());
            outs.extend(self.source.inverse_metric_exprs().iter().flatten().cloned());
            outs.extend(f.stress.components().iter().flatten().cloned());
            outs.extend(f.stress2.components().iter().flatten().cloned());
            outs.extend(f.div_s.iter().cloned());
            outs.extend(f.div_s2.iter().cloned());
            outs.extend(f.tau_pairing.iter().cloned());
            outs.extend(f.tau2_pairing.iter().cloned());
            Tape::compile(&outs, &self.source.coord_refs()).expect("fields use source coordinates")
        })
    }

    /// φ(p), checked against the target chart.
    pub fn image(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.source.check_point(p)?;
        let tape = Tape::compile(&self.components, &self.source.coord_refs())?;
        let q = tape.eval(p)?;
        if !self.target.contains(&q) {
            return Err(GeometryError::OutsideDomain {
                manifold: self.target.name().to_string(),
                point: q,
            });
        }
        Ok(q)
    }

    fn evaluate(&self, p: &[f64]) -> Result<(MapPointData, StressTensors)> {
        self.image(p)?;
        let v = self.tape().eval(p)?;
        let Layout { m, n } = self.layout();
        let mut it = v.into_iter();
        let mut take = |k: usize| -> Vec<f64> { it.by_ref().take(k).collect() };
        let rows = |flat: Vec<f64>, c: usize| -> Matrix { flat.chunks(c.max(1)).map(|r| r.to_vec()).collect() };
        let image = take(n);
        let dphi = rows(take(n * m), m);
        let energy_density = take(1)[0];
        let pullback_metric = rows(take(m * m), m);
        let nabla_dphi = take(n * m * m)
            .chunks(m * m)
            .map(|c| c.chunks(m).map(|r| r.to_vec()).collect())
            .collect();
        let tau = take(n);
        let nabla_tau = rows(take(n * m), m);
        let tau2 = take(n);
        let target_metric = rows(take(n * n), n);
        let source_metric = rows(take(m * m), m);
        let source_metric_inv = rows(take(m * m), m);
        let s = rows(take(m * m), m);
        let s2 = rows(take(m * m), m);
        let div_s = take(m);
        let div_s2 = take(m);
        let tau_pairing = take(m);
        let tau2_pairing = take(m);
        Ok((
            MapPointData {
                point: p.to_vec(),
                image,
                dphi,
                energy_density,
                pullback_metric,
                nabla_dphi,
                tau,
                nabla_tau,
                tau2,
                target_metric,
                source_metric,
                source_metric_inv,
            },
            StressTensors {
                s,
                s2,
                div_s,
                div_s2,
                tau_pairing,
                tau2_pairing,
            },
        ))
    }

    /// dφ, e(φ) and φ*h at `p`.
    pub fn first_order(&self, p: &[f64]) -> Result<FirstOrder> {
        let d = self.point_data(p)?;
        Ok(FirstOrder {
            dphi: d.dphi,
            energy_density: d.energy_density,
            pullback_metric: d.pullback_metric,
        })
    }

    /// Tension field τ(φ) at `p`.
    pub fn tension(&self, p: &[f64]) -> Result<Vec<f64>> {
        Ok(self.point_data(p)?.tau)
    }

    /// Bitension field τ₂(φ) at `p`.
    pub fn bitension(&self, p: &[f64]) -> Result<Vec<f64>> {
        Ok(self.point_data(p)?.tau2)
    }

    pub fn point_data(&self, p: &[f64]) -> Result<MapPointData> {
        Ok(self.evaluate(p)?.0)
    }

    pub fn stress(&self, p: &[f64]) -> Result<StressTensors> {
        Ok(self.evaluate(p)?.1)
    }

    pub fn point_data_and_stress(&self, p: &[f64]) -> Result<(MapPointData, StressTensors)> {
        self.evaluate(p)
    }
}

fn build_fields(map: &SmoothMap) -> MapFields {
    let src = &map.source;
    let tgt = &map.target;
    let (m, n) = (src.dim(), tgt.dim());
    let coords = src.coords();
    let g = src.metric().components();
    let gi = src.inverse_metric_exprs().to_vec();
    let gam = src.connection().christoffel.clone();
    let mut cache = DiffCache::new();

    // target geometry composed with φ
    let flat = tgt.is_euclidean();
    let (h, ngam, nriem) = if flat {
        (tgt.metric().components().to_vec(), None, None)
    } else {
        let bindings: Vec<(&str, Expr)> = tgt
            .coords()
            .iter()
            .map(String::as_str)
            .zip(map.components.iter().cloned())
            .collect();
        let h_flat: Vec<Expr> = tgt.metric().components().iter().flatten().cloned().collect();
        let conn = tgt.connection();
        let gam_flat: Vec<Expr> = conn.christoffel.iter().flatten().flatten().cloned().collect();
        let curv = tgt.curvature();
        let r_flat: Vec<Expr> = curv.riemann.iter().flatten().flatten().flatten().cloned().collect();
        let mut all = h_flat;
        all.extend(gam_flat);
        all.extend(r_flat);
        let composed = Expr::substitute_all(&all, &bindings);
        let (hs, rest) = composed.split_at(n * n);
        let (gs, rs) = rest.split_at(n * n * n);
        let h: Vec<Vec<Expr>> = hs.chunks(n).map(|c| c.to_vec()).collect();
        let ngam: Vec<Vec<Vec<Expr>>> = gs
            .chunks(n * n)
            .map(|c| c.chunks(n).map(|r| r.to_vec()).collect())
            .collect();
        let nriem: Vec<Vec<Vec<Vec<Expr>>>> = rs
            .chunks(n * n * n)
            .map(|c| {
                c.chunks(n * n)
                    .map(|r| r.chunks(n).map(|s| s.to_vec()).collect())
                    .collect()
            })
            .collect();
        (h, Some(ngam), Some(nriem))
    };

    let inner = |u: &[Expr], v: &[Expr]| -> Expr {
        if flat {
            Expr::sum(u.iter().zip(v).map(|(a, b)| a.mul(b)))
        } else {
            Expr::sum((0..n).flat_map(|a| (0..n).map(move |b| (a, b))).map(|(a, b)| {
                if h[a][b].is_zero() {
                    Expr::zero()
                } else {
                    h[a][b].mul(&u[a]).mul(&v[b])
                }
            }))
        }
    };
    // ^NΓ^α_βγ u^β w^γ
    let connection_term = |alpha: usize, u: &[Expr], w: &[Expr]| -> Expr {
        match &ngam {
            None => Expr::zero(),
            Some(ng) => Expr::sum((0..n).flat_map(|b| (0..n).map(move |c| (b, c))).map(|(b, c)| {
                if ng[alpha][b][c].is_zero() {
                    Expr::zero()
                } else {
                    ng[alpha][b][c].mul(&u[b]).mul(&w[c])
                }
            })),
        }
    };
    let g_trace = |f: &dyn Fn(usize, usize) -> Expr| -> Expr {
        Expr::sum(
            (0..m)
                .flat_map(|i| (0..m).map(move |j| (i, j)))
                .filter(|&(i, j)| !gi[i][j].is_zero())
                .map(|(i, j)| gi[i][j].mul(&f(i, j))),
        )
    };

    let dphi: Vec<Vec<Expr>> = map
        .components
        .iter()
        .map(|c| coords.iter().map(|x| cache.diff(c, x)).collect())
        .collect();
    // column i of dφ as a target vector
    let col = |i: usize| -> Vec<Expr> { (0..n).map(|a| dphi[a][i].clone()).collect() };
    let cols: Vec<Vec<Expr>> = (0..m).map(col).collect();

    let mut pullback = vec![vec![Expr::zero(); m]; m];
    for i in 0..m {
        for j in i..m {
            let e = inner(&cols[i], &cols[j]);
            pullback[i][j] = e.clone();
            pullback[j][i] = e;
        }
    }
    let energy = g_trace(&|i, j| pullback[i][j].clone()).scale(0.5);

    let nabla_dphi: Vec<Vec<Vec<Expr>>> = (0..n)
        .map(|a| {
            (0..m)
                .map(|i| {
                    (0..m)
                        .map(|j| {
                            let mut e = cache.diff(&dphi[a][i], &coords[j]);
                            for k in 0..m {
                                e = e.sub(&gam[k][i][j].mul(&dphi[a][k]));
                            }
                            e.add(&connection_term(a, &cols[i], &cols[j]))
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let tau: Vec<Expr> = (0..n)
        .map(|a| g_trace(&|i, j| nabla_dphi[a][i][j].clone()))
        .collect();

    // σ_i = ∇^φ_i τ
    let nabla_tau: Vec<Vec<Expr>> = (0..n)
        .map(|a| {
            (0..m)
                .map(|i| cache.diff(&tau[a], &coords[i]).add(&connection_term(a, &tau, &cols[i])))
                .collect()
        })
        .collect();
    let sigma: Vec<Vec<Expr>> = (0..m)
        .map(|j| (0..n).map(|a| nabla_tau[a][j].clone()).collect())
        .collect();
    // ∇²_{ij}τ = ∇_i σ_j − σ_{∇_i ∂_j}
    let hess_tau = |a: usize, i: usize, j: usize, cache: &mut DiffCache| -> Expr {
        let mut e = cache
            .diff(&nabla_tau[a][j], &coords[i])
            .add(&connection_term(a, &sigma[j], &cols[i]));
        for k in 0..m {
            e = e.sub(&gam[k][i][j].mul(&nabla_tau[a][k]));
        }
        e
    };
    let tau2: Vec<Expr> = (0..n)
        .map(|a| {
            let mut terms = Vec::new();
            for i in 0..m {
                for j in 0..m {
                    if gi[i][j].is_zero() {
                        continue;
                    }
                    let mut t = hess_tau(a, i, j, &mut cache);
                    if let Some(r) = &nriem {
                        // trace R^N(dφ_i, τ) dφ_j
                        let curv = Expr::sum(
                            (0..n)
                                .flat_map(|b| (0..n).flat_map(move |c| (0..n).map(move |d| (b, c, d))))
                                .filter(|&(b, c, d)| !r[a][b][c][d].is_zero())
                                .map(|(b, c, d)| r[a][b][c][d].mul(&cols[i][b]).mul(&tau[c]).mul(&cols[j][d])),
                        );
                        t = t.sub(&curv);
                    }
                    terms.push(gi[i][j].mul(&t));
                }
            }
            Expr::sum(terms)
        })
        .collect();

    let tau_sq = inner(&tau, &tau);
    let mut stress = vec![vec![Expr::zero(); m]; m];
    for i in 0..m {
        for j in i..m {
            stress[i][j] = energy.mul(&g[i][j]).sub(&pullback[i][j]);
        }
    }
    let dphi_nabla_tau = g_trace(&|i, j| inner(&cols[i], &sigma[j]));
    let scalar_part = tau_sq.scale(0.5).add(&dphi_nabla_tau);
    let mut stress2 = vec![vec![Expr::zero(); m]; m];
    for i in 0..m {
        for j in i..m {
            stress2[i][j] = scalar_part
                .mul(&g[i][j])
                .sub(&inner(&cols[i], &sigma[j]))
                .sub(&inner(&cols[j], &sigma[i]));
        }
    }
    let stress = SymTensorField::from_matrix(stress);
    let stress2 = SymTensorField::from_matrix(stress2);
    let div_s = src.divergence_exprs(&stress, &mut cache);
    let div_s2 = src.divergence_exprs(&stress2, &mut cache);
    let tau_pairing = (0..m).map(|i| inner(&tau, &cols[i])).collect();
    let tau2_pairing = (0..m).map(|i| inner(&tau2, &cols[i])).collect();

    MapFields {
        dphi,
        energy,
        pullback,
        nabla_dphi,
        tau,
        nabla_tau,
        tau2,
        target_metric: h.clone(),
        tau_sq,
        stress,
        stress2,
        div_s,
        div_s2,
        tau_pairing,
        tau2_pairing,
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;
    use crate::manifold::fixtures::{coords, field};
    use crate::manifold::Interval;

    pub fn exprs(vars: &[&str], srcs: &[&str]) -> Vec<Expr> {
        srcs.iter().map(|s| crate::expr::parse(s, vars).unwrap()).collect()
    }

    pub fn line(lo: f64, hi: f64) -> Arc<ChartedManifold> {
        Arc::new(
            ChartedManifold::new("R", coords(&["t"]), vec![Interval::open(lo, hi)], field(&["t"], &["1"]))
                .unwrap(),
        )
    }

    pub fn plane(name: &str, vars: [&str; 2], lo: f64, hi: f64) -> Arc<ChartedManifold> {
        Arc::new(
            ChartedManifold::euclidean(name, coords(&vars), vec![Interval::open(lo, hi); 2]).unwrap(),
        )
    }
}
