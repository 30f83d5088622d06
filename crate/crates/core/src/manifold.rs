//! Charted Riemannian manifolds and metric-derived tensors.
//!
//! Index conventions: `christoffel[k][i][j]` is Γ^k_ij, `riemann[l][i][j][k]`
//! is R^l_ijk with R(∂_i,∂_j)∂_k = R^l_ijk ∂_l and
//! R(X,Y)Z = ∇_X∇_Y Z − ∇_Y∇_X Z − ∇_[X,Y] Z. Ricci is Ric_jk = R^i_ijk, so the
//! round unit sphere has Ric = (m−1)g.

use std::sync::OnceLock;

use serde::Serialize;

use crate::error::{GeometryError, Result};
use crate::expr::{DiffCache, Expr, Tape};
use crate::linalg::{self, Matrix};

/// Excluded neighbourhood of non-periodic boundaries (chart singularities).
pub const BOUNDARY_MARGIN: f64 = 1e-3;

/// Pointwise sample sets also keep this fraction of the interval width
/// clear of non-periodic boundaries, where polar chart terms lose digits.
pub const SAMPLE_CLEARANCE: f64 = 0.02;

/// Determinants at or below this are treated as singular.
pub const DEGENERATE_DET: f64 = 1e-12;

/// One coordinate range of a chart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub periodic: bool,
}

impl Interval {
    pub fn new(lo: f64, hi: f64, periodic: bool) -> Self {
        Self { lo, hi, periodic }
    }

    pub fn open(lo: f64, hi: f64) -> Self {
        Self::new(lo, hi, false)
    }

    pub fn periodic(lo: f64, hi: f64) -> Self {
        Self::new(lo, hi, true)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.periodic || (x >= self.lo && x <= self.hi)
    }

    /// Range used for sampling: non-periodic ends pulled in by the margin.
    pub fn sampling_range(&self) -> (f64, f64) {
        if self.periodic {
            (self.lo, self.hi)
        } else {
            let width = self.hi - self.lo;
            let margin = if width.is_finite() {
                BOUNDARY_MARGIN.max(SAMPLE_CLEARANCE * width).min(width / 4.0)
            } else {
                BOUNDARY_MARGIN
            };
            (self.lo + margin, self.hi - margin)
        }
    }
}

/// A symmetric 2-tensor field given by component expressions.
#[derive(Debug, Clone)]
pub struct SymTensorField {
    comps: Vec<Vec<Expr>>,
}

impl SymTensorField {
    /// Builds from a full matrix; only the upper triangle is read.
    pub fn from_matrix(full: Vec<Vec<Expr>>) -> Self {
        let m = full.len();
        let mut comps = full;
        for i in 0..m {
            for j in 0..i {
                comps[i][j] = comps[j][i].clone();
            }
        }
        Self { comps }
    }

    /// Builds from the row-major upper triangle.
    pub fn from_upper(dim: usize, upper: &[Expr]) -> Result<Self> {
        let need = dim * (dim + 1) / 2;
        if upper.len() != need {
            return Err(GeometryError::Dimension {
                what: "upper-triangle entries".into(),
                expected: need,
                found: upper.len(),
            });
        }
        let mut comps = vec![vec![Expr::zero(); dim]; dim];
        let mut it = upper.iter();
        for i in 0..dim {
            for j in i..dim {
                let e = it.next().unwrap().clone();
                comps[i][j] = e.clone();
                comps[j][i] = e;
            }
        }
        Ok(Self { comps })
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn get(&self, i: usize, j: usize) -> &Expr {
        &self.comps[i][j]
    }

    pub fn components(&self) -> &[Vec<Expr>] {
        &self.comps
    }

    pub fn scale(&self, f: &Expr) -> Self {
        Self {
            comps: self
                .comps
                .iter()
                .map(|r| r.iter().map(|e| f.mul(e)).collect())
                .collect(),
        }
    }
}

/// Metric-derived tensors at one point.
#[derive(Debug, Clone, Serialize)]
pub struct PointEval {
    pub point: Vec<f64>,
    pub g: Matrix,
    pub g_inv: Matrix,
    pub sqrt_det_g: f64,
    /// `christoffel[k][i][j]` = Γ^k_ij
    pub christoffel: Vec<Vec<Vec<f64>>>,
    /// `riemann[l][i][j][k]` = R^l_ijk
    pub riemann: Vec<Vec<Vec<Vec<f64>>>>,
    pub ricci: Matrix,
    pub scalar: f64,
}

impl PointEval {
    /// max |R^l_ijk + R^l_jki + R^l_kij|
    pub fn first_bianchi_residual(&self) -> f64 {
        let m = self.g.len();
        let r = &self.riemann;
        let mut worst: f64 = 0.0;
        for l in 0..m {
            for i in 0..m {
                for j in 0..m {
                    for k in 0..m {
                        let s = r[l][i][j][k] + r[l][j][k][i] + r[l][k][i][j];
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
        worst
    }

    /// Sectional curvature of the plane spanned by ∂_i, ∂_j.
    pub fn sectional(&self, i: usize, j: usize) -> f64 {
        // K = <R(∂_i,∂_j)∂_j, ∂_i> / (g_ii g_jj − g_ij²)
        let m = self.g.len();
        let num: f64 = (0..m).map(|l| self.riemann[l][i][j][j] * self.g[l][i]).sum();
        num / (self.g[i][i] * self.g[j][j] - self.g[i][j] * self.g[i][j])
    }
}

pub(crate) struct Connection {
    pub det: Expr,
    pub g_inv: Vec<Vec<Expr>>,
    pub christoffel: Vec<Vec<Vec<Expr>>>,
}

pub(crate) struct Curvature {
    pub riemann: Vec<Vec<Vec<Vec<Expr>>>>,
    pub ricci: Vec<Vec<Expr>>,
    pub scalar: Expr,
}

/// A Riemannian manifold covered by a single chart.
pub struct ChartedManifold {
    name: String,
    coords: Vec<String>,
    domain: Vec<Interval>,
    metric: SymTensorField,
    euclidean: bool,
    connection: OnceLock<Connection>,
    curvature: OnceLock<Curvature>,
    point_tape: OnceLock<Tape>,
    volume_tape: OnceLock<Tape>,
}

impl std::fmt::Debug for ChartedManifold {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ChartedManifold")
            .field("name", &self.name)
            .field("coords", &self.coords)
            .field("domain", &self.domain)
            .finish()
    }
}

impl ChartedManifold {
    pub fn new(
        name: impl Into<String>,
        coords: Vec<String>,
        domain: Vec<Interval>,
        metric: SymTensorField,
    ) -> Result<Self> {
        let name = name.into();
        let m = coords.len();
        if m == 0 {
            return Err(GeometryError::Invalid(format!("manifold `{name}` has no coordinates")));
        }
        if domain.len() != m {
            return Err(GeometryError::Dimension {
                what: format!("domain intervals of `{name}`"),
                expected: m,
                found: domain.len(),
            });
        }
        if metric.dim() != m {
            return Err(GeometryError::Dimension {
                what: format!("metric size of `{name}`"),
                expected: m,
                found: metric.dim(),
            });
        }
        let names: Vec<&str> = coords.iter().map(String::as_str).collect();
        for row in metric.components() {
            for e in row {
                if let Some(v) = e.variables().into_iter().find(|v| !names.contains(&v.as_str())) {
                    return Err(GeometryError::Invalid(format!(
                        "metric of `{name}` uses `{v}`, which is not a coordinate"
                    )));
                }
            }
        }
        Ok(Self {
            name,
            coords,
            domain,
            metric,
            euclidean: false,
            connection: OnceLock::new(),
            curvature: OnceLock::new(),
            point_tape: OnceLock::new(),
            volume_tape: OnceLock::new(),
        })
    }

    /// Flat R^n with the identity metric; connection and curvature vanish.
    pub fn euclidean(name: impl Into<String>, coords: Vec<String>, domain: Vec<Interval>) -> Result<Self> {
        let n = coords.len();
        let metric = SymTensorField::from_matrix(
            (0..n)
                .map(|i| (0..n).map(|j| if i == j { Expr::one() } else { Expr::zero() }).collect())
                .collect(),
        );
        let mut m = Self::new(name, coords, domain, metric)?;
        m.euclidean = true;
        Ok(m)
    }

    /// R^n with coordinates `x1..xn` over an unbounded box.
    pub fn standard_euclidean(n: usize) -> Self {
        let coords = (1..=n).map(|i| format!("x{i}")).collect();
        let domain = vec![Interval::open(f64::NEG_INFINITY, f64::INFINITY); n];
        Self::euclidean(format!("R{n}"), coords, domain).expect("valid Euclidean space")
    }

    /// Metric induced by an embedding into flat R^n: g_ij = Σ ∂_iX·∂_jX.
    pub fn induced(
        name: impl Into<String>,
        coords: Vec<String>,
        domain: Vec<Interval>,
        embedding: &[Expr],
    ) -> Result<Self> {
        let m = coords.len();
        let mut cache = DiffCache::new();
        let jac: Vec<Vec<Expr>> = embedding
            .iter()
            .map(|x| coords.iter().map(|c| cache.diff(x, c)).collect())
            .collect();
        let full = (0..m)
            .map(|i| {
                (0..m)
                    .map(|j| Expr::sum(jac.iter().map(|row| row[i].mul(&row[j]))))
                    .collect()
            })
            .collect();
        Self::new(name, coords, domain, SymTensorField::from_matrix(full))
    }

    /// Same chart with metric `t·g`.
    pub fn scaled(&self, t: f64) -> Result<Self> {
        self.with_metric(
            format!("{}*{t}", self.name),
            self.metric.scale(&Expr::constant(t)),
        )
    }

    /// Same chart with metric `e^{2ρ} g`.
    pub fn conformal(&self, rho: &Expr) -> Result<Self> {
        self.with_metric(
            format!("{}*exp(2rho)", self.name),
            self.metric.scale(&rho.scale(2.0).exp()),
        )
    }

    fn with_metric(&self, name: String, metric: SymTensorField) -> Result<Self> {
        Self::new(name, self.coords.clone(), self.domain.clone(), metric)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn coord_refs(&self) -> Vec<&str> {
        self.coords.iter().map(String::as_str).collect()
    }

    pub fn domain(&self) -> &[Interval] {
        &self.domain
    }

    pub fn metric(&self) -> &SymTensorField {
        &self.metric
    }

    pub fn is_euclidean(&self) -> bool {
        self.euclidean
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim() && self.domain.iter().zip(p).all(|(iv, x)| iv.contains(*x))
    }

    pub(crate) fn connection(&self) -> &Connection {
        self.connection.get_or_init(|| {
            let m = self.dim();
            let g = self.metric.components();
            if self.euclidean {
                return Connection {
                    det: Expr::one(),
                    g_inv: g.to_vec(),
                    christoffel: vec![vec![vec![Expr::zero(); m]; m]; m],
                };
            }
            let (g_inv, det) = linalg::sym_inverse(g);
            let mut cache = DiffCache::new();
            // dg[k][i][j] = ∂_k g_ij
            let dg: Vec<Vec<Vec<Expr>>> = self
                .coords
                .iter()
                .map(|c| {
                    (0..m)
                        .map(|i| (0..m).map(|j| cache.diff(&g[i][j], c)).collect())
                        .collect()
                })
                .collect();
            let mut christoffel = vec![vec![vec![Expr::zero(); m]; m]; m];
            for i in 0..m {
                for j in i..m {
                    // first kind: [ij,l] = ½(∂_i g_jl + ∂_j g_il − ∂_l g_ij)
                    let first: Vec<Expr> = (0..m)
                        .map(|l| dg[i][j][l].add(&dg[j][i][l]).sub(&dg[l][i][j]).scale(0.5))
                        .collect();
                    for k in 0..m {
                        let e = Expr::sum((0..m).map(|l| g_inv[k][l].mul(&first[l])));
                        christoffel[k][i][j] = e.clone();
                        christoffel[k][j][i] = e;
                    }
                }
            }
            Connection {
                det,
                g_inv,
                christoffel,
            }
        })
    }

    pub(crate) fn curvature(&self) -> &Curvature {
        self.curvature.get_or_init(|| {
            let m = self.dim();
            let zero4 = || vec![vec![vec![vec![Expr::zero(); m]; m]; m]; m];
            if self.euclidean {
                return Curvature {
                    riemann: zero4(),
                    ricci: vec![vec![Expr::zero(); m]; m],
                    scalar: Expr::zero(),
                };
            }
            let conn = self.connection();
            let gam = &conn.christoffel;
            let mut cache = DiffCache::new();
            // dgam[i][l][j][k] = ∂_i Γ^l_jk
            let dgam: Vec<Vec<Vec<Vec<Expr>>>> = self
                .coords
                .iter()
                .map(|c| {
                    (0..m)
                        .map(|l| {
                            (0..m)
                                .map(|j| (0..m).map(|k| cache.diff(&gam[l][j][k], c)).collect())
                                .collect()
                        })
                        .collect()
                })
                .collect();
            let mut riemann = zero4();
            for l in 0..m {
                for i in 0..m {
                    for j in 0..m {
                        if i == j {
                            continue;
                        }
                        for k in 0..m {
                            if j < i {
                                // antisymmetry in (i, j)
                                riemann[l][i][j][k] = riemann[l][j][i][k].neg();
                                continue;
                            }
                            let quad = Expr::sum((0..m).map(|p| {
                                gam[l][i][p].mul(&gam[p][j][k]).sub(&gam[l][j][p].mul(&gam[p][i][k]))
                            }));
                            riemann[l][i][j][k] = dgam[i][l][j][k].sub(&dgam[j][l][i][k]).add(&quad);
                        }
                    }
                }
            }
            let mut ricci = vec![vec![Expr::zero(); m]; m];
            for j in 0..m {
                for k in j..m {
                    // average the two index orders; exact symmetry of the output
                    let a = Expr::sum((0..m).map(|i| riemann[i][i][j][k].clone()));
                    let b = Expr::sum((0..m).map(|i| riemann[i][i][k][j].clone()));
                    let e = if j == k { a } else { a.add(&b).scale(0.5) };
                    ricci[j][k] = e.clone();
                    ricci[k][j] = e;
                }
            }
            let scalar = Expr::sum(
                (0..m).flat_map(|j| (0..m).map(move |k| (j, k))).map(|(j, k)| conn.g_inv[j][k].mul(&ricci[j][k])),
            );
            Curvature {
                riemann,
                ricci,
                scalar,
            }
        })
    }

    /// Ricci tensor as a symbolic field.
    pub fn ricci_field(&self) -> SymTensorField {
        SymTensorField::from_matrix(self.curvature().ricci.clone())
    }

    pub fn scalar_curvature_expr(&self) -> Expr {
        self.curvature().scalar.clone()
    }

    pub fn inverse_metric_exprs(&self) -> &[Vec<Expr>] {
        &self.connection().g_inv
    }

    /// Symbolic (Div T)_j = g^{ik}(∇_i T)_{kj}.
    pub fn divergence_exprs(&self, t: &SymTensorField, cache: &mut DiffCache) -> Vec<Expr> {
        let m = self.dim();
        let conn = self.connection();
        let (gi, gam) = (&conn.g_inv, &conn.christoffel);
        let tc = t.components();
        (0..m)
            .map(|j| {
                let mut terms = Vec::new();
                for i in 0..m {
                    for k in 0..m {
                        if gi[i][k].is_zero() {
                            continue;
                        }
                        // (∇_i T)_kj = ∂_i T_kj − Γ^l_ik T_lj − Γ^l_ij T_kl
                        let mut cov = cache.diff(&tc[k][j], &self.coords[i]);
                        for l in 0..m {
                            cov = cov
                                .sub(&gam[l][i][k].mul(&tc[l][j]))
                                .sub(&gam[l][i][j].mul(&tc[k][l]));
                        }
                        terms.push(gi[i][k].mul(&cov));
                    }
                }
                Expr::sum(terms)
            })
            .collect()
    }

    /// Divergence of a symmetric tensor field at `p`.
    pub fn divergence(&self, t: &SymTensorField, p: &[f64]) -> Result<Vec<f64>> {
        self.check_point(p)?;
        let mut cache = DiffCache::new();
        let exprs = self.divergence_exprs(t, &mut cache);
        let tape = Tape::compile(&exprs, &self.coord_refs())?;
        Ok(tape.eval(p)?)
    }

    /// Symbolic (L_ξ g)_ij = ∇_i ξ_j + ∇_j ξ_i.
    pub fn lie_derivative_exprs(&self, xi: &[Expr]) -> Result<SymTensorField> {
        let m = self.dim();
        if xi.len() != m {
            return Err(GeometryError::Dimension {
                what: "vector field components".into(),
                expected: m,
                found: xi.len(),
            });
        }
        let g = self.metric.components();
        let gam = &self.connection().christoffel;
        let lowered: Vec<Expr> = (0..m)
            .map(|j| Expr::sum((0..m).map(|k| g[j][k].mul(&xi[k]))))
            .collect();
        let mut cache = DiffCache::new();
        let nabla = |i: usize, j: usize, cache: &mut DiffCache| {
            let mut e = cache.diff(&lowered[j], &self.coords[i]);
            for (k, low) in lowered.iter().enumerate() {
                e = e.sub(&gam[k][i][j].mul(low));
            }
            e
        };
        let mut full = vec![vec![Expr::zero(); m]; m];
        for i in 0..m {
            for j in i..m {
                full[i][j] = nabla(i, j, &mut cache).add(&nabla(j, i, &mut cache));
            }
        }
        Ok(SymTensorField::from_matrix(full))
    }

    /// Lie derivative of the metric along `xi`, evaluated at `p`.
    pub fn lie_derivative_metric(&self, xi: &[Expr], p: &[f64]) -> Result<Matrix> {
        self.check_point(p)?;
        let field = self.lie_derivative_exprs(xi)?;
        self.eval_tensor(&field, p)
    }

    /// Evaluates a symmetric field at `p`.
    pub fn eval_tensor(&self, t: &SymTensorField, p: &[f64]) -> Result<Matrix> {
        let m = self.dim();
        let flat: Vec<Expr> = t.components().iter().flatten().cloned().collect();
        let tape = Tape::compile(&flat, &self.coord_refs())?;
        let v = tape.eval(p)?;
        Ok(v.chunks(m).map(|c| c.to_vec()).collect())
    }

    pub fn check_point(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.dim() {
            return Err(GeometryError::Dimension {
                what: format!("point on `{}`", self.name),
                expected: self.dim(),
                found: p.len(),
            });
        }
        if !self.contains(p) {
            return Err(GeometryError::OutsideDomain {
                manifold: self.name.clone(),
                point: p.to_vec(),
            });
        }
        Ok(())
    }

    fn point_tape(&self) -> &Tape {
        self.point_tape.get_or_init(|| {
            let conn = self.connection();
            let curv = self.curvature();
            let mut outs: Vec<Expr> = Vec::new();
            outs.extend(self.metric.components().iter().flatten().cloned());
            outs.extend(conn.g_inv.iter().flatten().cloned());
            outs.push(conn.det.clone());
            outs.extend(conn.christoffel.iter().flatten().flatten().cloned());
            outs.extend(curv.riemann.iter().flatten().flatten().flatten().cloned());
            outs.extend(curv.ricci.iter().flatten().cloned());
            outs.push(curv.scalar.clone());
            Tape::compile(&outs, &self.coord_refs()).expect("metric uses only chart coordinates")
        })
    }

    /// Metric, connection and curvature at `p`.
    pub fn point_eval(&self, p: &[f64]) -> Result<PointEval> {
        self.check_point(p)?;
        let m = self.dim();
        let v = match self.point_tape().eval(p) {
            Ok(v) => v,
            Err(e) => {
                let det = linalg::det(&self.metric_at(p)?);
                if det <= DEGENERATE_DET {
                    return Err(GeometryError::DegenerateMetric {
                        manifold: self.name.clone(),
                        point: p.to_vec(),
                        det,
                    });
                }
                return Err(e.into());
            }
        };
        let mut it = v.into_iter();
        let mut take = |k: usize| -> Vec<f64> { it.by_ref().take(k).collect() };
        let mat = |flat: Vec<f64>| -> Matrix { flat.chunks(m).map(|c| c.to_vec()).collect() };
        let g = mat(take(m * m));
        let g_inv = mat(take(m * m));
        let det = take(1)[0];
        if det <= DEGENERATE_DET {
            return Err(GeometryError::DegenerateMetric {
                manifold: self.name.clone(),
                point: p.to_vec(),
                det,
            });
        }
        let christoffel = take(m * m * m)
            .chunks(m * m)
            .map(|c| c.chunks(m).map(|r| r.to_vec()).collect())
            .collect();
        let riemann = take(m * m * m * m)
            .chunks(m * m * m)
            .map(|c| {
                c.chunks(m * m)
                    .map(|r| r.chunks(m).map(|s| s.to_vec()).collect())
                    .collect()
            })
            .collect();
        let ricci = mat(take(m * m));
        let scalar = take(1)[0];
        Ok(PointEval {
            point: p.to_vec(),
            g,
            g_inv,
            sqrt_det_g: det.sqrt(),
            christoffel,
            riemann,
            ricci,
            scalar,
        })
    }

    /// √det g at `p`, without connection or curvature.
    pub fn volume_density(&self, p: &[f64]) -> Result<f64> {
        self.check_point(p)?;
        let tape = self.volume_tape.get_or_init(|| {
            let det = linalg::sym_det(self.metric.components());
            Tape::compile(&[det], &self.coord_refs()).expect("metric uses only chart coordinates")
        });
        let det = tape.eval(p)?[0];
        if det <= DEGENERATE_DET {
            return Err(GeometryError::DegenerateMetric {
                manifold: self.name.clone(),
                point: p.to_vec(),
                det,
            });
        }
        Ok(det.sqrt())
    }

    /// Metric matrix at `p` without derived quantities.
    pub fn metric_at(&self, p: &[f64]) -> Result<Matrix> {
        self.eval_tensor(&self.metric, p)
    }

    /// Interior tensor grid with `per_axis^m` nodes inside the sampling ranges.
    /// Unbounded directions use [−1, 1].
    pub fn interior_grid(&self, per_axis: usize) -> Vec<Vec<f64>> {
        let m = self.dim();
        let axes: Vec<Vec<f64>> = self
            .domain
            .iter()
            .map(|iv| {
                let (lo, hi) = iv.sampling_range();
                let (lo, hi) = if lo.is_finite() && hi.is_finite() { (lo, hi) } else { (-1.0, 1.0) };
                (0..per_axis)
                    .map(|k| lo + (hi - lo) * (k as f64 + 0.5) / per_axis as f64)
                    .collect()
            })
            .collect();
        let total = per_axis.pow(m as u32);
        (0..total)
            .map(|idx| {
                let mut r = idx;
                (0..m)
                    .map(|d| {
                        let x = axes[d][r % per_axis];
                        r /= per_axis;
                        x
                    })
                    .collect()
            })
            .collect()
    }

    /// Checks positive definiteness on an interior grid with `per_axis^m` nodes.
    pub fn validate_positive_definite(&self, per_axis: usize) -> Result<()> {
        let m = self.dim();
        let flat: Vec<Expr> = self.metric.components().iter().flatten().cloned().collect();
        let tape = Tape::compile(&flat, &self.coord_refs())?;
        for p in self.interior_grid(per_axis) {
            let v = tape.eval(&p)?;
            let g: Matrix = v.chunks(m).map(|c| c.to_vec()).collect();
            if !linalg::is_positive_definite(&g) {
                return Err(GeometryError::NotPositiveDefinite {
                    manifold: self.name.clone(),
                    point: p,
                });
            }
        }
        Ok(())
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use crate::expr::parse;
    use std::f64::consts::PI;

    /// Central differences of the metric components; an independent route to Γ.
    fn fd_christoffel(m: &ChartedManifold, p: &[f64]) -> Vec<Vec<Vec<f64>>> {
        let n = m.dim();
        let h = 1e-5;
        let g0 = m.metric_at(p).unwrap();
        let gi = linalg::inverse(&g0).unwrap();
        let dg: Vec<Matrix> = (0..n)
            .map(|k| {
                let mut a = p.to_vec();
                let mut b = p.to_vec();
                a[k] += h;
                b[k] -= h;
                let (ga, gb) = (m.metric_at(&a).unwrap(), m.metric_at(&b).unwrap());
                (0..n)
                    .map(|i| (0..n).map(|j| (ga[i][j] - gb[i][j]) / (2.0 * h)).collect())
                    .collect()
            })
            .collect();
        (0..n)
            .map(|k| {
                (0..n)
                    .map(|i| {
                        (0..n)
                            .map(|j| {
                                (0..n)
                                    .map(|l| 0.5 * gi[k][l] * (dg[i][j][l] + dg[j][i][l] - dg[l][i][j]))
                                    .sum()
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn round_sphere_christoffel_and_scalar() {
        let s = sphere(1.0);
        let p = [PI / 3.0, 0.0];
        let pe = s.point_eval(&p).unwrap();
        let fd = fd_christoffel(&s, &p);
        // frozen from the finite-difference oracle: −√3/4 and 1/√3
        assert!((fd[0][1][1] - (-3f64.sqrt() / 4.0)).abs() < 1e-9);
        assert!((fd[1][0][1] - 1.0 / 3f64.sqrt()).abs() < 1e-9);
        assert!((pe.christoffel[0][1][1] - (-3f64.sqrt() / 4.0)).abs() < 1e-14);
        assert!((pe.christoffel[1][0][1] - 1.0 / 3f64.sqrt()).abs() < 1e-14);
        assert!((pe.scalar - 2.0).abs() < 1e-12);
    }

    #[test]
    fn flat_torus_has_no_curvature() {
        let v = ["u", "v"];
        let t = ChartedManifold::new(
            "T2",
            coords(&v),
            vec![Interval::periodic(0.0, 2.0 * PI); 2],
            field(&v, &["1", "0", "1"]),
        )
        .unwrap();
        let pe = t.point_eval(&[0.4, 2.0]).unwrap();
        assert!(pe.christoffel.iter().flatten().flatten().all(|x| *x == 0.0));
        assert!(pe.riemann.iter().flatten().flatten().flatten().all(|x| *x == 0.0));
        assert_eq!(pe.scalar, 0.0);
    }

    #[test]
    fn sphere_scale_law() {
        for r in [1.0, 2.0, 3.5] {
            let s = sphere(r);
            for p in [[0.4, 1.0], [1.3, 5.0], [2.9, 0.1]] {
                let pe = s.point_eval(&p).unwrap();
                assert!((pe.scalar - 2.0 / (r * r)).abs() < 1e-10);
                assert!((pe.sectional(0, 1) - 1.0 / (r * r)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn point_eval_invariants() {
        let v = ["x", "y", "z"];
        let m = ChartedManifold::new(
            "perturbed",
            coords(&v),
            vec![Interval::open(-1.0, 1.0); 3],
            field(
                &v,
                &[
                    "1 + 0.1*sin(x)*cos(y)",
                    "0.05*sin(z)",
                    "0",
                    "1 + 0.1*sin(y + z)",
                    "0.05*cos(x)",
                    "1 + 0.1*cos(x*z)",
                ],
            ),
        )
        .unwrap();
        let pe = m.point_eval(&[0.2, -0.3, 0.5]).unwrap();
        let prod = linalg::matmul(&pe.g, &pe.g_inv);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((prod[i][j] - want).abs() < 1e-12);
                for k in 0..3 {
                    assert_eq!(pe.christoffel[k][i][j], pe.christoffel[k][j][i]);
                }
                assert!((pe.ricci[i][j] - pe.ricci[j][i]).abs() < 1e-10);
            }
        }
        assert!(pe.first_bianchi_residual() < 1e-9);
    }

    #[test]
    fn divergence_of_metric_vanishes() {
        let s = sphere(1.5);
        let d = s.divergence(s.metric(), &[0.9, 2.0]).unwrap();
        assert!(d.iter().all(|x| x.abs() < 1e-14));
    }

    #[test]
    fn einstein_tensor_is_divergence_free_on_sphere() {
        let s = sphere(1.0);
        let ric = s.ricci_field();
        let r = s.scalar_curvature_expr().scale(0.5);
        let g = s.metric().components();
        let einstein = SymTensorField::from_matrix(
            (0..2)
                .map(|i| (0..2).map(|j| ric.get(i, j).sub(&r.mul(&g[i][j]))).collect())
                .collect(),
        );
        for p in [[0.5, 0.3], [1.7, 4.0], [2.5, 6.0]] {
            let d = s.divergence(&einstein, &p).unwrap();
            assert!(d.iter().all(|x| x.abs() < 1e-10), "{d:?}");
        }
    }

    #[test]
    fn divergence_of_function_times_metric_is_differential() {
        let flat = ChartedManifold::standard_euclidean(2);
        let f = parse("x1", &["x1", "x2"]).unwrap();
        let t = flat.metric().scale(&f);
        let d = flat.divergence(&t, &[0.3, -0.8]).unwrap();
        assert_eq!(d, vec![1.0, 0.0]);
    }

    #[test]
    fn lie_derivatives_on_the_plane() {
        let flat = ChartedManifold::standard_euclidean(2);
        let v = ["x1", "x2"];
        let rot = [parse("-x2", &v).unwrap(), parse("x1", &v).unwrap()];
        let l = flat.lie_derivative_metric(&rot, &[0.7, -0.2]).unwrap();
        assert!(linalg::max_abs(&l) == 0.0);
        let radial = [parse("x1", &v).unwrap(), parse("x2", &v).unwrap()];
        let l = flat.lie_derivative_metric(&radial, &[0.7, -0.2]).unwrap();
        assert_eq!(l, vec![vec![2.0, 0.0], vec![0.0, 2.0]]);
    }

    #[test]
    fn constant_field_on_the_line_is_killing() {
        let line = ChartedManifold::new(
            "R",
            coords(&["t"]),
            vec![Interval::open(-5.0, 5.0)],
            field(&["t"], &["1"]),
        )
        .unwrap();
        let l = line.lie_derivative_metric(&[Expr::constant(0.7)], &[1.0]).unwrap();
        assert_eq!(l, vec![vec![0.0]]);
    }

    #[test]
    fn degenerate_metric_is_reported() {
        let v = ["x", "y"];
        let m = ChartedManifold::new(
            "cone",
            coords(&v),
            vec![Interval::open(-1.0, 1.0); 2],
            field(&v, &["(x - y)^2", "0", "1"]),
        )
        .unwrap();
        assert!(matches!(
            m.point_eval(&[0.3, 0.3]),
            Err(GeometryError::DegenerateMetric { .. })
        ));
        // diagonal grid nodes sit on x = y
        assert!(m.validate_positive_definite(9).is_err());
        let bad = ChartedManifold::new(
            "indefinite",
            coords(&v),
            vec![Interval::open(-1.0, 1.0); 2],
            field(&v, &["1", "0", "-1"]),
        )
        .unwrap();
        assert!(bad.validate_positive_definite(9).is_err());
    }

    #[test]
    fn points_outside_the_chart_are_rejected() {
        let s = sphere(1.0);
        assert!(matches!(
            s.point_eval(&[4.0, 0.0]),
            Err(GeometryError::OutsideDomain { .. })
        ));
        // periodic coordinates wrap
        assert!(s.point_eval(&[1.0, 10.0]).is_ok());
    }
}
