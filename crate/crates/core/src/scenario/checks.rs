//! Registry of identity checks and their runners.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::expr::Expr;
use crate::linalg;
use crate::manifold::ChartedManifold;
use crate::map::SmoothMap;
use crate::quadrature::{self, Grid};
use crate::sampling;
use crate::stress;
use crate::submanifold::Immersion;

use super::config::{CheckSpec, ConfigError, PointsSpec, Workspace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SubjectKind {
    Manifold,
    Map,
    Immersion,
}

/// Whether a residual must stay below or above its tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Bound {
    Upper,
    Lower,
}

#[derive(Debug, Clone)]
pub struct Residual {
    pub name: String,
    pub value: f64,
    pub tol: f64,
    pub bound: Bound,
}

impl Residual {
    pub fn passes(&self) -> bool {
        match self.bound {
            Bound::Upper => self.value <= self.tol,
            Bound::Lower => self.value >= self.tol,
        }
    }
}

#[derive(Debug, Default)]
pub struct Outcome {
    pub residuals: Vec<Residual>,
    pub warnings: Vec<String>,
}

impl Outcome {
    fn upper(&mut self, name: &str, value: f64, tol: f64) {
        self.residuals.push(Residual {
            name: name.into(),
            value,
            tol,
            bound: Bound::Upper,
        });
    }

    fn lower(&mut self, name: &str, value: f64, tol: f64) {
        self.residuals.push(Residual {
            name: name.into(),
            value,
            tol,
            bound: Bound::Lower,
        });
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Param {
    Float,
    FloatList,
    Int,
    Bool,
    Str,
    ExprList,
}

type Runner = fn(&Ctx) -> Result<Outcome>;

pub struct CheckKind {
    pub name: &'static str,
    pub subject: SubjectKind,
    pub default_tol: f64,
    pub summary: &'static str,
    params: &'static [(&'static str, Param, bool)],
    uses_grid: bool,
    run: Runner,
}

impl CheckKind {
    pub fn uses_grid(&self) -> bool {
        self.uses_grid
    }
}

macro_rules! kind {
    ($name:literal, $subject:ident, $tol:expr, $summary:literal, [$($p:literal : $t:ident $(= $req:literal)?),*], $grid:literal, $run:path) => {
        CheckKind {
            name: $name,
            subject: SubjectKind::$subject,
            default_tol: $tol,
            summary: $summary,
            params: &[$(($p, Param::$t, kind!(@req $($req)?))),*],
            uses_grid: $grid,
            run: $run,
        }
    };
    (@req) => { false };
    (@req $r:literal) => { $r };
}

pub static REGISTRY: &[CheckKind] = &[
    kind!("curvature-invariants", Manifold, 1e-9, "g⁻¹g = I, Ricci symmetry and the first Bianchi identity", [], false, run_curvature_invariants),
    kind!("scalar-curvature", Manifold, 1e-10, "scalar curvature equals an expected constant", ["expected": Float = true], false, run_scalar_curvature),
    kind!("killing", Manifold, 1e-12, "Lie derivative of the metric along a field vanishes", ["field": ExprList = true], false, run_killing),
    kind!("tension-norm", Map, 1e-9, "|τ(φ)| equals an expected constant", ["expected": Float = true], false, run_tension_norm),
    kind!("bitension-norm", Map, 1e-8, "|τ₂(φ)| vanishes", [], false, run_bitension_norm),
    kind!("hessian-symmetry", Map, 1e-10, "∇dφ is symmetric and τ is its trace", [], false, run_hessian_symmetry),
    kind!("div-identities", Map, 1e-8, "Div S = −⟨τ, dφ⟩ and Div S₂ = −⟨τ₂, dφ⟩", [], false, run_div_identities),
    kind!("stress-vanishes", Map, 1e-9, "S or S₂ vanishes", ["tensor": Str], false, run_stress_vanishes),
    kind!("stress-lambda", Map, 1e-9, "S or S₂ is a constant multiple of g", ["tensor": Str, "expected": Float, "half_tau": Bool], false, run_stress_lambda),
    kind!("homothety-law", Map, 1e-10, "S₂ under t·g equals S₂/t", ["factors": FloatList = true], false, run_homothety),
    kind!("conformal-law", Map, 1e-8, "S₂ under e^{2ρ}g equals e^{−2ρ}S₂ for surfaces", ["rho": Str = true], false, run_conformal),
    kind!("fundamental-forms", Immersion, 1e-10, "B is normal, trace S = 0 and τ = mH", [], false, run_fundamental_forms),
    kind!("mean-curvature-norm", Immersion, 1e-10, "|H| equals an expected constant", ["expected": Float = true], false, run_mean_curvature_norm),
    kind!("pseudo-umbilic", Immersion, 1e-10, "|H|²g − ⟨H, B⟩ vanishes", [], false, run_pseudo_umbilic),
    kind!("gauss-energy", Immersion, 1e-10, "e(G) = ½m²|H|² − ½r, and 2|H|² − K for surfaces", [], false, run_gauss_energy),
    kind!("gauss-oracle", Immersion, 1e-7, "m⟨H, B⟩ − ricci equals the Plücker pullback", ["rotation": Float], false, run_gauss_oracle),
    kind!("ruh-vilms", Immersion, 1e-9, "normal derivative of H vanishes (or not)", ["expect": Str, "threshold": Float], false, run_ruh_vilms),
    kind!("divergence-relation", Immersion, 1e-7, "Div S^G + ½ Div S₂ − ¼ d|τ|² = 0", [], false, run_divergence_relation),
    kind!("cmc-divergences", Immersion, 1e-8, "Div S₂ and Div S^G both vanish", [], false, run_cmc_divergences),
    kind!("equivalence-chain", Immersion, 1e-8, "S^G = 0, G* ∝ g, pseudo-umbilicity and S₂ = ½|τ|²g hold or fail together", ["expect": Str, "threshold": Float], false, run_equivalence_chain),
    kind!("willmore-gradient", Immersion, 1e-10, "−4|H|²H + 2⟨H.B, B⟩ vanishes (or not)", ["expect": Str, "threshold": Float], false, run_willmore_gradient),
    kind!("omega-variation", Immersion, 1e-6, "first variation of g along normal V is −2⟨V, B⟩", ["normal": ExprList, "random_fields": Int], false, run_omega),
    kind!("weiner-chain", Immersion, 1e-9, "algebraic chain behind the Willmore equation", ["normal": ExprList, "random_fields": Int], false, run_weiner),
    kind!("integral", Immersion, 1e-6, "∫ f v_g equals an expected value", ["quantity": Str = true, "expected": Float = true], true, run_integral),
    kind!("euler-characteristic", Immersion, 0.01, "round(∫K/2π) equals χ", ["expected": Int = true], true, run_euler),
    kind!("gauss-bonnet-identity", Immersion, 1e-5, "∫e(G) − 2∫|H|² + 2πχ = 0", ["chi": Int = true], true, run_gauss_bonnet),
];

pub fn lookup(kind: &str) -> Option<&'static CheckKind> {
    REGISTRY.iter().find(|k| k.name == kind)
}

const DEFAULT_POINTS: usize = 20;
const DEFAULT_RANDOM_FIELDS: i64 = 20;
const INTEGRAL_QUANTITIES: [&str; 5] = ["area", "willmore", "gauss-energy", "gaussian-curvature", "scalar-curvature"];

/// Static validation of one check entry.
pub fn validate(ws: &Workspace, spec: &CheckSpec, key: &str) -> std::result::Result<(), ConfigError> {
    let kind = lookup(&spec.kind).ok_or_else(|| {
        ConfigError::new(format!("{key}.kind"), format!("unknown check kind `{}`", spec.kind))
    })?;
    let manifold = match kind.subject {
        SubjectKind::Map => ws.map_subject(&spec.subject).map(|m| m.source().clone()),
        SubjectKind::Immersion => ws.immersions.get(&spec.subject).map(|i| i.source().clone()),
        SubjectKind::Manifold => ws.subject_manifold(SubjectKind::Manifold, &spec.subject).cloned(),
    }
    .ok_or_else(|| {
        ConfigError::new(
            format!("{key}.subject"),
            format!("unknown {:?} `{}`", kind.subject, spec.subject).to_lowercase(),
        )
    })?;
    let dim = manifold.dim();
    for (name, value) in &spec.params {
        let pkey = format!("{key}.{name}");
        let (_, ty, _) = kind
            .params
            .iter()
            .find(|(n, _, _)| n == name)
            .ok_or_else(|| ConfigError::new(&pkey, format!("not a parameter of `{}`", kind.name)))?;
        let ok = match ty {
            Param::Float => value.as_float().is_some() || value.as_integer().is_some(),
            Param::Int => value.as_integer().is_some(),
            Param::Bool => value.as_bool().is_some(),
            Param::Str => value.as_str().is_some(),
            Param::FloatList => value
                .as_array()
                .is_some_and(|a| a.iter().all(|x| x.as_float().is_some() || x.as_integer().is_some())),
            Param::ExprList => value.as_array().is_some_and(|a| a.iter().all(|x| x.is_str())),
        };
        if !ok {
            return Err(ConfigError::new(&pkey, format!("expected {ty:?}").to_lowercase()));
        }
    }
    for (name, _, required) in kind.params {
        if *required && !spec.params.contains_key(*name) {
            return Err(ConfigError::new(format!("{key}.{name}"), format!("required by `{}`", kind.name)));
        }
    }
    // expression parameters must parse in the subject's coordinates
    let vars = manifold.coord_refs();
    for name in ["field", "normal"] {
        if let Some(list) = spec.params.get(name).and_then(|v| v.as_array()) {
            let want = match (kind.subject, name) {
                (SubjectKind::Manifold, _) => dim,
                _ => ws.immersions.get(&spec.subject).map_or(dim, |i| i.ambient_dim()),
            };
            if list.len() != want {
                return Err(ConfigError::new(
                    format!("{key}.{name}"),
                    format!("expected {want} components, found {}", list.len()),
                ));
            }
            for (i, v) in list.iter().enumerate() {
                ws.parse_expr(&format!("{key}.{name}[{i}]"), v.as_str().unwrap(), &vars)?;
            }
        }
    }
    if let Some(rho) = spec.params.get("rho").and_then(|v| v.as_str()) {
        ws.parse_expr(&format!("{key}.rho"), rho, &vars)?;
    }
    for (name, allowed) in [
        ("expect", &["zero", "nonzero", "hold", "fail"][..]),
        ("tensor", &["s", "s2"][..]),
        ("quantity", &INTEGRAL_QUANTITIES[..]),
    ] {
        if let Some(s) = spec.params.get(name).and_then(|v| v.as_str()) {
            if !allowed.contains(&s) {
                return Err(ConfigError::new(
                    format!("{key}.{name}"),
                    format!("`{s}` is not one of {allowed:?}"),
                ));
            }
        }
    }
    if let Some(PointsSpec::List(pts)) = &spec.points {
        if let Some((i, p)) = pts.iter().enumerate().find(|(_, p)| p.len() != dim) {
            return Err(ConfigError::new(
                format!("{key}.points[{i}]"),
                format!("expected {dim} coordinates, found {}", p.len()),
            ));
        }
    }
    if let Some(region) = &spec.region {
        if region.len() != dim {
            return Err(ConfigError::new(format!("{key}.region"), format!("expected {dim} ranges")));
        }
    }
    if let Some(grid) = &spec.grid {
        if grid.len() != dim || grid.contains(&0) {
            return Err(ConfigError::new(format!("{key}.grid"), format!("expected {dim} positive node counts")));
        }
    }
    if let Some(tol) = spec.tol {
        if !(tol >= 0.0) {
            return Err(ConfigError::new(format!("{key}.tol"), "must be non-negative"));
        }
    }
    Ok(())
}

/// Everything a runner needs.
pub struct Ctx<'a> {
    pub ws: &'a Workspace,
    pub spec: &'a CheckSpec,
    pub kind: &'static CheckKind,
    pub tol: f64,
    pub tol_scale: f64,
    pub points: Vec<Vec<f64>>,
    pub grid: Option<Vec<usize>>,
    pub seed: u64,
}

impl Ctx<'_> {
    pub fn new<'a>(
        ws: &'a Workspace,
        spec: &'a CheckSpec,
        tol_scale: f64,
        grid_override: Option<usize>,
        seed: u64,
    ) -> Ctx<'a> {
        let kind = lookup(&spec.kind).expect("validated kind");
        let manifold = ws.subject_manifold(kind.subject, &spec.subject).expect("validated subject");
        let points = match &spec.points {
            Some(PointsSpec::List(list)) => list.clone(),
            Some(PointsSpec::Count(n)) => sample(manifold, spec, *n, seed),
            None => sample(manifold, spec, DEFAULT_POINTS, seed),
        };
        let grid = kind.uses_grid.then(|| match (grid_override, &spec.grid) {
            (Some(n), _) => vec![n; manifold.dim()],
            (None, Some(g)) => g.clone(),
            (None, None) => Grid::default_sizes(manifold.domain()),
        });
        Ctx {
            ws,
            spec,
            kind,
            tol: spec.tol.unwrap_or(kind.default_tol) * tol_scale,
            tol_scale,
            points,
            grid,
            seed,
        }
    }

    pub fn run(&self) -> Result<Outcome> {
        (self.kind.run)(self)
    }

    fn map(&self) -> &SmoothMap {
        self.ws.map_subject(&self.spec.subject).expect("validated subject")
    }

    fn immersion(&self) -> &Immersion {
        &self.ws.immersions[&self.spec.subject]
    }

    fn manifold(&self) -> &ChartedManifold {
        self.ws
            .subject_manifold(SubjectKind::Manifold, &self.spec.subject)
            .expect("validated subject")
    }

    fn float(&self, name: &str) -> Option<f64> {
        let v = self.spec.params.get(name)?;
        v.as_float().or_else(|| v.as_integer().map(|i| i as f64))
    }

    fn int(&self, name: &str) -> Option<i64> {
        self.spec.params.get(name)?.as_integer()
    }

    fn string(&self, name: &str) -> Option<&str> {
        self.spec.params.get(name)?.as_str()
    }

    fn exprs(&self, name: &str) -> Option<Vec<Expr>> {
        let vars = self.ws.subject_manifold(self.kind.subject, &self.spec.subject)?.coord_refs();
        let list = self.spec.params.get(name)?.as_array()?;
        Some(
            list.iter()
                .map(|v| self.ws.parse_expr(name, v.as_str().unwrap(), &vars).expect("validated expression"))
                .collect(),
        )
    }

    /// Lower bound for "nonzero"/"fail" expectations, loosened by the scale.
    fn threshold(&self, default: f64) -> f64 {
        self.float("threshold").unwrap_or(default) / self.tol_scale
    }

    fn expect_zero(&self) -> bool {
        !matches!(self.string("expect"), Some("nonzero" | "fail"))
    }

    fn normal_fields(&self) -> Result<Vec<Vec<Expr>>> {
        if let Some(v) = self.exprs("normal") {
            return Ok(vec![v]);
        }
        let imm = self.immersion();
        let count = self.int("random_fields").unwrap_or(DEFAULT_RANDOM_FIELDS).max(1) as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x9e37_79b9_7f4a_7c15);
        let coords = imm.source().coords().to_vec();
        (0..count)
            .map(|_| {
                // W = c + Σ c_i x^i, projected onto the normal space
                let w: Vec<Expr> = (0..imm.ambient_dim())
                    .map(|_| {
                        let mut e = Expr::constant(rng.gen_range(-1.0..=1.0));
                        for c in &coords {
                            e = e.add(&Expr::var(c).sin().scale(rng.gen_range(-1.0..=1.0)));
                        }
                        e
                    })
                    .collect();
                imm.normal_part(&w)
            })
            .collect()
    }
}

fn sample(m: &ChartedManifold, spec: &CheckSpec, count: usize, seed: u64) -> Vec<Vec<f64>> {
    match &spec.region {
        None => sampling::sample_points(m, count, seed),
        Some(region) => sampling::halton(region.len(), count, seed)
            .into_iter()
            .map(|u| u.iter().zip(region).map(|(t, [lo, hi])| lo + t * (hi - lo)).collect())
            .collect(),
    }
}

fn max_over<F>(points: &[Vec<f64>], mut f: F) -> Result<f64>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let mut worst: f64 = 0.0;
    for p in points {
        let v = f(p)?;
        worst = if v.is_nan() { f64::NAN } else { worst.max(v) };
    }
    Ok(worst)
}

fn min_over<F>(points: &[Vec<f64>], mut f: F) -> Result<f64>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let mut best = f64::INFINITY;
    for p in points {
        best = best.min(f(p)?);
    }
    Ok(best)
}

fn run_curvature_invariants(c: &Ctx) -> Result<Outcome> {
    let m = c.manifold();
    let (mut inv, mut ricci, mut bianchi) = (0.0f64, 0.0f64, 0.0f64);
    for p in &c.points {
        let e = m.point_eval(p)?;
        let prod = linalg::matmul(&e.g_inv, &e.g);
        inv = inv.max(linalg::max_abs(&sub_identity(prod)));
        for i in 0..m.dim() {
            for j in 0..m.dim() {
                ricci = ricci.max((e.ricci[i][j] - e.ricci[j][i]).abs());
            }
        }
        bianchi = bianchi.max(e.first_bianchi_residual());
    }
    let mut out = Outcome::default();
    out.upper("max |g⁻¹g − I|", inv, c.tol.min(1e-12 * c.tol_scale));
    out.upper("max Ricci asymmetry", ricci, c.tol);
    out.upper("max first Bianchi residual", bianchi, c.tol);
    Ok(out)
}

fn sub_identity(mut a: linalg::Matrix) -> linalg::Matrix {
    for (i, row) in a.iter_mut().enumerate() {
        row[i] -= 1.0;
    }
    a
}

fn run_scalar_curvature(c: &Ctx) -> Result<Outcome> {
    let want = c.float("expected").unwrap();
    let m = c.manifold();
    let r = max_over(&c.points, |p| Ok((m.point_eval(p)?.scalar - want).abs()))?;
    let mut out = Outcome::default();
    out.upper("max |r − expected|", r, c.tol);
    Ok(out)
}

fn run_killing(c: &Ctx) -> Result<Outcome> {
    let m = c.manifold();
    let field = m.lie_derivative_exprs(&c.exprs("field").unwrap())?;
    let r = max_over(&c.points, |p| Ok(linalg::max_abs(&m.eval_tensor(&field, p)?)))?;
    let mut out = Outcome::default();
    out.upper("max |L_ξ g|", r, c.tol);
    Ok(out)
}

fn run_tension_norm(c: &Ctx) -> Result<Outcome> {
    let want = c.float("expected").unwrap();
    let phi = c.map();
    let r = max_over(&c.points, |p| Ok((phi.point_data(p)?.tau_norm() - want).abs()))?;
    let mut out = Outcome::default();
    out.upper("max ||τ| − expected|", r, c.tol);
    Ok(out)
}

fn run_bitension_norm(c: &Ctx) -> Result<Outcome> {
    let phi = c.map();
    let r = max_over(&c.points, |p| Ok(phi.point_data(p)?.tau2_norm()))?;
    let mut out = Outcome::default();
    out.upper("max |τ₂|", r, c.tol);
    Ok(out)
}

fn run_hessian_symmetry(c: &Ctx) -> Result<Outcome> {
    let phi = c.map();
    let (mut sym, mut tr) = (0.0f64, 0.0f64);
    for p in &c.points {
        let d = phi.point_data(p)?;
        sym = sym.max(d.hessian_asymmetry());
        tr = tr.max(d.trace_residual());
    }
    let mut out = Outcome::default();
    out.upper("max ∇dφ asymmetry", sym, c.tol);
    out.upper("max |τ − trace ∇dφ|", tr, c.tol.min(1e-12 * c.tol_scale));
    Ok(out)
}

fn run_div_identities(c: &Ctx) -> Result<Outcome> {
    let r = stress::check_div_identities(c.map(), &c.points)?;
    let mut out = Outcome::default();
    out.upper("max |Div S + ⟨τ, dφ⟩|", r.s, c.tol);
    out.upper("max |Div S₂ + ⟨τ₂, dφ⟩|", r.s2, c.tol);
    Ok(out)
}

fn stress_tensor(c: &Ctx, p: &[f64]) -> Result<(linalg::Matrix, crate::map::MapPointData)> {
    let (d, st) = c.map().point_data_and_stress(p)?;
    let t = if c.string("tensor") == Some("s") { st.s } else { st.s2 };
    Ok((t, d))
}

fn run_stress_vanishes(c: &Ctx) -> Result<Outcome> {
    let r = max_over(&c.points, |p| {
        let (t, d) = stress_tensor(c, p)?;
        Ok(linalg::tensor_norm(&d.source_metric_inv, &t))
    })?;
    let mut out = Outcome::default();
    out.upper("max ‖S‖_g", r, c.tol);
    Ok(out)
}

fn run_stress_lambda(c: &Ctx) -> Result<Outcome> {
    let (mut fit_res, mut expected_res, mut half_res) = (0.0f64, 0.0f64, 0.0f64);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in &c.points {
        let (t, d) = stress_tensor(c, p)?;
        let fit = stress::lambda_fit(&t, &d.source_metric, &d.source_metric_inv);
        fit_res = fit_res.max(fit.residual);
        lo = lo.min(fit.lambda);
        hi = hi.max(fit.lambda);
        if let Some(want) = c.float("expected") {
            expected_res = expected_res.max((fit.lambda - want).abs());
        }
        half_res = half_res.max((fit.lambda - 0.5 * d.tau_norm().powi(2)).abs());
    }
    let mut out = Outcome::default();
    out.upper("max ‖S − λg‖_g", fit_res, c.tol);
    out.upper("spread of λ", hi - lo, c.tol);
    if c.float("expected").is_some() {
        out.upper("max |λ − expected|", expected_res, c.tol);
    }
    if c.spec.params.get("half_tau").and_then(|v| v.as_bool()) == Some(true) {
        out.upper("max |λ − ½|τ|²|", half_res, c.tol);
    }
    Ok(out)
}

fn run_homothety(c: &Ctx) -> Result<Outcome> {
    let factors: Vec<f64> = c.spec.params["factors"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_float().or_else(|| v.as_integer().map(|i| i as f64)).unwrap())
        .collect();
    let mut out = Outcome::default();
    for t in factors {
        let mut worst: f64 = 0.0;
        for (a, b) in stress::homothety_transform(c.map(), t, &c.points)? {
            for (x, y) in a.iter().flatten().zip(b.iter().flatten()) {
                worst = worst.max((y - x / t).abs());
            }
        }
        out.upper(&format!("max |S̃₂ − S₂/t| at t = {t}"), worst, c.tol);
    }
    Ok(out)
}

fn run_conformal(c: &Ctx) -> Result<Outcome> {
    let vars = c.map().source().coord_refs();
    let rho = c.ws.parse_expr("rho", c.string("rho").unwrap(), &vars).expect("validated expression");
    let outcomes = stress::conformal_surface_transform(c.map(), &rho, &c.points)?;
    let mut out = Outcome::default();
    let worst = outcomes.iter().map(|o| o.law_residual()).fold(0.0, f64::max);
    if let Some(v) = outcomes.iter().filter_map(|o| o.hypothesis_violation).reduce(f64::max) {
        out.warnings.push(format!(
            "orthogonality hypothesis violated: max |⟨τ, dφ(∂_i)⟩| = {v:e}"
        ));
    }
    out.upper("max |S̃₂ − e^{−2ρ}S₂|", worst, c.tol);
    Ok(out)
}

fn run_fundamental_forms(c: &Ctx) -> Result<Outcome> {
    let imm = c.immersion();
    let m = imm.dim() as f64;
    let (mut normal, mut trace, mut tau) = (0.0f64, 0.0f64, 0.0f64);
    for p in &c.points {
        let d = imm.point_data(p)?;
        normal = normal.max(d.b_tangential_residual());
        trace = trace.max(d.traceless_trace_residual());
        let t = imm.as_map().tension(p)?;
        tau = tau.max(t.iter().zip(&d.h).map(|(a, h)| (a - m * h).abs()).fold(0.0, f64::max));
    }
    let mut out = Outcome::default();
    out.upper("max |⟨B, dX⟩|", normal, c.tol);
    out.upper("max |trace S|", trace, c.tol);
    out.upper("max |τ − mH|", tau, c.tol);
    Ok(out)
}

fn run_mean_curvature_norm(c: &Ctx) -> Result<Outcome> {
    let want = c.float("expected").unwrap();
    let imm = c.immersion();
    let r = max_over(&c.points, |p| Ok((imm.point_data(p)?.h_norm_sq().sqrt() - want).abs()))?;
    let mut out = Outcome::default();
    out.upper("max ||H| − expected|", r, c.tol);
    Ok(out)
}

fn run_pseudo_umbilic(c: &Ctx) -> Result<Outcome> {
    let imm = c.immersion();
    let r = max_over(&c.points, |p| {
        let d = imm.point_data(p)?;
        Ok(linalg::tensor_norm(&d.g_inv, &d.pseudo_umbilic_residual))
    })?;
    let mut out = Outcome::default();
    out.upper("max ‖|H|²g − H.B‖_g", r, c.tol);
    Ok(out)
}

fn run_gauss_energy(c: &Ctx) -> Result<Outcome> {
    let imm = c.immersion();
    let m = imm.dim() as f64;
    let (mut general, mut surface) = (0.0f64, 0.0f64);
    for p in &c.points {
        let d = imm.point_data(p)?;
        let want = 0.5 * m * m * d.h_norm_sq() - 0.5 * d.scalar;
        general = general.max((d.gauss_energy - want).abs());
        if imm.dim() == 2 {
            surface = surface.max(d.surface_energy_residual());
        }
    }
    let mut out = Outcome::default();
    out.upper("max |e(G) − ½m²|H|² + ½r|", general, c.tol);
    if imm.dim() == 2 {
        out.upper("max |e(G) − 2|H|² + K|", surface, c.tol);
    }
    Ok(out)
}

fn run_gauss_oracle(c: &Ctx) -> Result<Outcome> {
    let imm = c.immersion();
    let angle = c.float("rotation").unwrap_or(0.7);
    let rotated = imm.gauss_pluecker_oracle_rotated(angle, &c.points)?;
    let (mut formula, mut frame) = (0.0f64, 0.0f64);
    for (p, rot) in c.points.iter().zip(&rotated) {
        let d = imm.point_data(p)?;
        let oracle = imm.gauss_pluecker_oracle(p)?;
        let diff = |a: &linalg::Matrix, b: &linalg::Matrix| {
            a.iter().flatten().zip(b.iter().flatten()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
        };
        formula = formula.max(diff(&d.gauss_pullback, &oracle));
        frame = frame.max(diff(&oracle, rot));
    }
    let mut out = Outcome::default();
    out.upper("max |(m⟨H,B⟩ − ricci) − Plücker pullback|", formula, c.tol);
    out.upper("max |oracle − rotated-frame oracle|", frame, 1e-9 * c.tol_scale);
    Ok(out)
}

fn run_ruh_vilms(c: &Ctx) -> Result<Outcome> {
    let imm = c.immersion();
    let mut out = Outcome::default();
    if c.expect_zero() {
        let r = max_over(&c.points, |p| imm.ruh_vilms_residual(p))?;
        out.upper("max |∇^⊥H|", r, c.tol);
    } else {
        let r = min_over(&c.points, |p| imm.ruh_vilms_residual(p))?;
        out.lower("min |∇^⊥H|", r, c.threshold(1e-3));
    }
    Ok(out)
}

fn run_divergence_relation(c: &Ctx) -> Result<Outcome> {
    let imm = c.immersion();
    let r = max_over(&c.points, |p| imm.divergence_relation_residual(p))?;
    let mut out = Outcome::default();
    out.upper("max ‖Div S^G + ½Div S₂ − ¼d|τ|²‖", r, c.tol);
    Ok(out)
}

fn run_cmc_divergences(c: &Ctx) -> Result<Outcome> {
    let imm = c.immersion();
    let (mut s2, mut sg) = (0.0f64, 0.0f64);
    for p in &c.points {
        let d = imm.divergences(p)?;
        s2 = s2.max(d.div_s2_norm());
        sg = sg.max(d.div_s_g_norm());
    }
    let mut out = Outcome::default();
    out.upper("max ‖Div S₂‖", s2, c.tol);
    out.upper("max ‖Div S^G‖", sg, c.tol);
    Ok(out)
}

const CHAIN_NAMES: [&str; 4] = ["‖S^G‖", "‖G* − (tr G*/m)g‖", "‖|H|²g − H.B‖", "‖S₂ − ½|τ|²g‖"];

fn run_equivalence_chain(c: &Ctx) -> Result<Outcome> {
    let imm = c.immersion();
    let chains = c
        .points
        .iter()
        .map(|p| imm.equivalence_chain(p).map(|e| e.as_array()))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Outcome::default();
    let hold = c.string("expect").is_none_or(|s| s == "hold" || s == "zero");
    for (k, name) in CHAIN_NAMES.iter().enumerate() {
        if hold {
            let v = chains.iter().map(|a| a[k]).fold(0.0, f64::max);
            out.upper(&format!("max {name}"), v, c.tol);
        } else {
            let v = chains.iter().map(|a| a[k]).fold(f64::INFINITY, f64::min);
            out.lower(&format!("min {name}"), v, c.threshold(1e-3));
        }
    }
    Ok(out)
}

fn run_willmore_gradient(c: &Ctx) -> Result<Outcome> {
    let imm = c.immersion();
    let norm = |p: &[f64]| -> Result<f64> { Ok(linalg::norm(&imm.willmore_gradient(p)?)) };
    let mut out = Outcome::default();
    if c.expect_zero() {
        out.upper("max |−4|H|²H + 2⟨H.B,B⟩|", max_over(&c.points, norm)?, c.tol);
    } else {
        out.lower("min |−4|H|²H + 2⟨H.B,B⟩|", min_over(&c.points, norm)?, c.threshold(1e-2));
    }
    Ok(out)
}

fn run_omega(c: &Ctx) -> Result<Outcome> {
    let imm = c.immersion();
    let mut worst: f64 = 0.0;
    for v in c.normal_fields()? {
        for p in &c.points {
            worst = worst.max(imm.variation_omega_check(&v, p)?.residual());
        }
    }
    let mut out = Outcome::default();
    out.upper("max |ω_fd − (−2V.B)|", worst, c.tol);
    Ok(out)
}

fn run_weiner(c: &Ctx) -> Result<Outcome> {
    let imm = c.immersion();
    let (mut r1, mut r2) = (0.0f64, 0.0f64);
    for v in c.normal_fields()? {
        for p in &c.points {
            let (a, b) = imm.weiner_algebra_check(&v, p)?;
            r1 = r1.max(a);
            r2 = r2.max(b);
        }
    }
    let mut out = Outcome::default();
    out.upper("max |⟨|H|²g − H.B, ω⟩ − ⟨W(H), V⟩|", r1, c.tol);
    out.upper("max ‖⟨−|H|²g + H.B, B⟩ − Σ⟨H,S⟩S‖", r2, c.tol);
    Ok(out)
}

fn run_integral(c: &Ctx) -> Result<Outcome> {
    let imm = c.immersion();
    let grid = c.grid.as_ref().unwrap();
    let want = c.float("expected").unwrap();
    let integral = match c.string("quantity").unwrap() {
        "area" => quadrature::integrate(imm.source(), |_| Ok(1.0), grid)?,
        "willmore" => quadrature::integrate_immersion(imm, |d| d.h_norm_sq(), grid)?,
        "gauss-energy" => quadrature::integrate_immersion(imm, |d| d.gauss_energy, grid)?,
        "gaussian-curvature" => quadrature::integrate_immersion(imm, |d| d.gaussian_curvature(), grid)?,
        _ => quadrature::integrate_immersion(imm, |d| d.scalar, grid)?,
    };
    let mut out = Outcome::default();
    out.upper("|∫ − expected|", (integral.value - want).abs(), c.tol);
    out.upper("|∫ on doubled grid − ∫|", integral.change, 10.0 * c.tol);
    Ok(out)
}

fn run_euler(c: &Ctx) -> Result<Outcome> {
    let imm = c.immersion();
    let want = c.int("expected").unwrap();
    let e = quadrature::euler_characteristic(imm, c.grid.as_ref().unwrap())?;
    let mut out = Outcome::default();
    out.upper("|χ − expected|", (e.chi - want).abs() as f64, 0.0);
    out.upper("rounding gap", e.gap, c.tol);
    Ok(out)
}

fn run_gauss_bonnet(c: &Ctx) -> Result<Outcome> {
    let imm = c.immersion();
    let chi = c.int("chi").unwrap();
    let g = quadrature::gauss_bonnet_identity(imm, chi, c.grid.as_ref().unwrap())?;
    let mut out = Outcome::default();
    out.upper("|∫e(G) − 2∫|H|² + 2πχ|", g.residual, c.tol);
    out.upper(
        "doubling change",
        g.energy.change.max(g.willmore.change),
        10.0 * c.tol,
    );
    Ok(out)
}
