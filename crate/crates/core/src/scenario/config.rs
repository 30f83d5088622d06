//! Scenario configuration files and the objects they declare.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Deserialize;
use thiserror::Error;

use crate::expr::{parse_with_constants, Expr};
use crate::manifold::{ChartedManifold, Interval, SymTensorField};
use crate::map::SmoothMap;
use crate::submanifold::Immersion;

use super::checks::{self, SubjectKind};

/// A configuration problem; `key` is the dotted path of the offending entry.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{key}: {message}")]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            key: key.into(),
            message: message.into(),
        }
    }
}

type CResult<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(default)]
    pub scenario: Option<ScenarioMeta>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default)]
    pub manifold: BTreeMap<String, ManifoldSpec>,
    #[serde(default)]
    pub map: BTreeMap<String, MapSpec>,
    #[serde(default)]
    pub immersion: BTreeMap<String, ImmersionSpec>,
    #[serde(default)]
    pub check: Vec<CheckSpec>,
    #[serde(default)]
    pub output: Option<OutputSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioMeta {
    pub name: String,
    pub anchor: String,
    #[serde(default)]
    pub description: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldSpec {
    pub coords: Vec<String>,
    #[serde(default)]
    pub domain: Option<Vec<Vec<toml::Value>>>,
    #[serde(default)]
    pub metric: Option<Vec<String>>,
    #[serde(default)]
    pub embedding: Option<Vec<String>>,
    #[serde(default)]
    pub euclidean: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    pub from: String,
    pub to: String,
    pub components: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImmersionSpec {
    pub coords: Vec<String>,
    pub domain: Vec<Vec<toml::Value>>,
    pub embedding: Vec<String>,
    #[serde(default)]
    pub metric: Option<Vec<String>>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct CheckSpec {
    pub kind: String,
    pub subject: String,
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub scenario: Option<String>,
    #[serde(default)]
    pub anchor: Option<String>,
    #[serde(default)]
    pub points: Option<PointsSpec>,
    #[serde(default)]
    pub region: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub grid: Option<Vec<usize>>,
    #[serde(default)]
    pub tol: Option<f64>,
    /// Kind-specific parameters.
    #[serde(flatten)]
    pub params: toml::Table,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum PointsSpec {
    Count(usize),
    List(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub report: Option<String>,
}

/// Manifolds, maps and immersions built from a configuration.
#[derive(Default)]
pub struct Workspace {
    pub params: Vec<(String, f64)>,
    pub manifolds: BTreeMap<String, Arc<ChartedManifold>>,
    pub maps: BTreeMap<String, Arc<SmoothMap>>,
    pub immersions: BTreeMap<String, Arc<Immersion>>,
}

impl Workspace {
    pub fn constants(&self) -> Vec<(&str, f64)> {
        self.params.iter().map(|(k, v)| (k.as_str(), *v)).collect()
    }

    pub fn parse_expr(&self, key: &str, src: &str, vars: &[&str]) -> CResult<Expr> {
        parse_with_constants(src, vars, &self.constants()).map_err(|e| ConfigError::new(key, e.to_string()))
    }

    /// Source manifold of a map-like subject.
    pub fn map_subject(&self, name: &str) -> Option<&SmoothMap> {
        self.maps
            .get(name)
            .map(|m| m.as_ref())
            .or_else(|| self.immersions.get(name).map(|i| i.as_map()))
    }

    pub fn subject_manifold(&self, kind: SubjectKind, name: &str) -> Option<&Arc<ChartedManifold>> {
        match kind {
            SubjectKind::Manifold => self
                .manifolds
                .get(name)
                .or_else(|| self.immersions.get(name).map(|i| i.source())),
            SubjectKind::Map => self.map_subject(name).map(|m| m.source()),
            SubjectKind::Immersion => self.immersions.get(name).map(|i| i.source()),
        }
    }
}

/// A validated configuration.
pub struct Config {
    pub raw: RawConfig,
    pub workspace: Workspace,
}

impl Config {
    pub fn from_toml(text: &str) -> CResult<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| {
            let msg = e.message().to_string();
            // serde names the offending field in its message
            ConfigError::new("<config>", msg)
        })?;
        let workspace = build_workspace(&raw)?;
        for (i, c) in raw.check.iter().enumerate() {
            checks::validate(&workspace, c, &format!("check[{i}]"))?;
        }
        Ok(Self { raw, workspace })
    }

    pub fn load(path: &std::path::Path) -> CResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("<config>", format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn seed(&self) -> u64 {
        self.raw.seed.unwrap_or(1)
    }
}

fn bound(ws: &Workspace, key: &str, v: &toml::Value) -> CResult<f64> {
    match v {
        toml::Value::Integer(i) => Ok(*i as f64),
        toml::Value::Float(f) => Ok(*f),
        toml::Value::String(s) => {
            let e = ws.parse_expr(key, s, &[])?;
            e.as_const()
                .ok_or_else(|| ConfigError::new(key, format!("`{s}` is not a constant")))
        }
        other => Err(ConfigError::new(key, format!("expected a number or expression, found {other}"))),
    }
}

fn parse_domain(ws: &Workspace, key: &str, dims: usize, raw: &[Vec<toml::Value>]) -> CResult<Vec<Interval>> {
    if raw.len() != dims {
        return Err(ConfigError::new(
            key,
            format!("expected {dims} intervals, found {}", raw.len()),
        ));
    }
    raw.iter()
        .enumerate()
        .map(|(i, iv)| {
            let k = format!("{key}[{i}]");
            if iv.len() < 2 || iv.len() > 3 {
                return Err(ConfigError::new(&k, "expected [lo, hi] or [lo, hi, periodic]"));
            }
            let lo = bound(ws, &k, &iv[0])?;
            let hi = bound(ws, &k, &iv[1])?;
            let periodic = match iv.get(2) {
                None => false,
                Some(toml::Value::Boolean(b)) => *b,
                Some(other) => return Err(ConfigError::new(&k, format!("periodic flag must be a boolean, found {other}"))),
            };
            if !(lo < hi) {
                return Err(ConfigError::new(&k, format!("empty interval [{lo}, {hi}]")));
            }
            Ok(Interval::new(lo, hi, periodic))
        })
        .collect()
}

fn parse_list(ws: &Workspace, key: &str, srcs: &[String], vars: &[&str]) -> CResult<Vec<Expr>> {
    srcs.iter()
        .enumerate()
        .map(|(i, s)| ws.parse_expr(&format!("{key}[{i}]"), s, vars))
        .collect()
}

fn geometry(key: &str) -> impl Fn(crate::GeometryError) -> ConfigError + '_ {
    move |e| ConfigError::new(key, e.to_string())
}

fn build_workspace(raw: &RawConfig) -> CResult<Workspace> {
    let mut ws = Workspace {
        params: raw.params.iter().map(|(k, v)| (k.clone(), *v)).collect(),
        ..Default::default()
    };
    for (name, spec) in &raw.manifold {
        let key = format!("manifold.{name}");
        let vars: Vec<&str> = spec.coords.iter().map(String::as_str).collect();
        let domain = match &spec.domain {
            Some(d) => parse_domain(&ws, &format!("{key}.domain"), vars.len(), d)?,
            None if spec.euclidean => vec![Interval::open(f64::NEG_INFINITY, f64::INFINITY); vars.len()],
            None => return Err(ConfigError::new(format!("{key}.domain"), "missing")),
        };
        let declared = [spec.metric.is_some(), spec.embedding.is_some(), spec.euclidean]
            .iter()
            .filter(|b| **b)
            .count();
        if declared != 1 {
            return Err(ConfigError::new(
                &key,
                "exactly one of `metric`, `embedding` or `euclidean = true` is required",
            ));
        }
        let m = if spec.euclidean {
            ChartedManifold::euclidean(name.clone(), spec.coords.clone(), domain)
        } else if let Some(metric) = &spec.metric {
            let upper = parse_list(&ws, &format!("{key}.metric"), metric, &vars)?;
            let field = SymTensorField::from_upper(vars.len(), &upper).map_err(geometry(&format!("{key}.metric")))?;
            ChartedManifold::new(name.clone(), spec.coords.clone(), domain, field)
        } else {
            let emb = parse_list(&ws, &format!("{key}.embedding"), spec.embedding.as_ref().unwrap(), &vars)?;
            ChartedManifold::induced(name.clone(), spec.coords.clone(), domain, &emb)
        }
        .map_err(geometry(&key))?;
        ws.manifolds.insert(name.clone(), Arc::new(m));
    }
    for (name, spec) in &raw.immersion {
        let key = format!("immersion.{name}");
        if ws.manifolds.contains_key(name) {
            return Err(ConfigError::new(&key, format!("name `{name}` is already a manifold")));
        }
        let vars: Vec<&str> = spec.coords.iter().map(String::as_str).collect();
        let domain = parse_domain(&ws, &format!("{key}.domain"), vars.len(), &spec.domain)?;
        let emb = parse_list(&ws, &format!("{key}.embedding"), &spec.embedding, &vars)?;
        let imm = match &spec.metric {
            Some(metric) => {
                let mkey = format!("{key}.metric");
                let upper = parse_list(&ws, &mkey, metric, &vars)?;
                let field = SymTensorField::from_upper(vars.len(), &upper).map_err(geometry(&mkey))?;
                let src = ChartedManifold::new(name.clone(), spec.coords.clone(), domain, field).map_err(geometry(&mkey))?;
                Immersion::with_metric(name.clone(), Arc::new(src), emb).map_err(geometry(&mkey))?
            }
            None => Immersion::new(name.clone(), spec.coords.clone(), domain, emb).map_err(geometry(&key))?,
        };
        ws.immersions.insert(name.clone(), Arc::new(imm));
    }
    for (name, spec) in &raw.map {
        let key = format!("map.{name}");
        let find = |which: &str, target: &str| -> CResult<Arc<ChartedManifold>> {
            ws.manifolds
                .get(target)
                .or_else(|| ws.immersions.get(target).map(|i| i.source()))
                .cloned()
                .ok_or_else(|| ConfigError::new(format!("{key}.{which}"), format!("unknown manifold `{target}`")))
        };
        let from = find("from", &spec.from)?;
        let to = find("to", &spec.to)?;
        let vars = from.coord_refs();
        let comps = parse_list(&ws, &format!("{key}.components"), &spec.components, &vars)?;
        if comps.len() != to.dim() {
            return Err(ConfigError::new(
                format!("{key}.components"),
                format!("expected {} components for `{}`, found {}", to.dim(), spec.to, comps.len()),
            ));
        }
        let map = SmoothMap::new(name.clone(), from, to, comps).map_err(geometry(&key))?;
        ws.maps.insert(name.clone(), Arc::new(map));
    }
    Ok(ws)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SPHERE: &str = r#"
        [params]
        R = 2.0

        [manifold.S2]
        coords = ["th", "ph"]
        domain = [[0, "pi"], [0, "2*pi", true]]
        metric = ["R^2", "0", "R^2*sin(th)^2"]

        [manifold.R3]
        coords = ["x", "y", "z"]
        euclidean = true

        [map.incl]
        from = "S2"
        to = "R3"
        components = ["R*sin(th)*cos(ph)", "R*sin(th)*sin(ph)", "R*cos(th)"]

        [[check]]
        kind = "tension-norm"
        subject = "incl"
        expected = 1.0
        points = 5
    "#;

    #[test]
    fn parses_manifolds_maps_and_checks() {
        let c = Config::from_toml(SPHERE).unwrap();
        let m = &c.workspace.manifolds["S2"];
        assert_eq!(m.domain()[1], Interval::periodic(0.0, 2.0 * std::f64::consts::PI));
        let tau = c.workspace.maps["incl"].tension(&[1.0, 0.5]).unwrap();
        assert!((crate::linalg::norm(&tau) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unknown_manifold_is_named() {
        let text = SPHERE.replace("to = \"R3\"", "to = \"Q\"");
        let e = Config::from_toml(&text).err().unwrap();
        assert_eq!(e.key, "map.incl.to");
        assert!(e.message.contains("`Q`"));
    }

    #[test]
    fn bad_expression_points_to_component() {
        let text = SPHERE.replace("R*cos(th)\"]", "R*cos(th\"]");
        let e = Config::from_toml(&text).err().unwrap();
        assert_eq!(e.key, "map.incl.components[2]");
    }

    #[test]
    fn unknown_check_kind_is_rejected() {
        let text = SPHERE.replace("tension-norm", "tension-nrom");
        let e = Config::from_toml(&text).err().unwrap();
        assert_eq!(e.key, "check[0].kind");
    }

    #[test]
    fn unknown_top_level_key_is_rejected() {
        let e = Config::from_toml("[manifolds.X]\ncoords = [\"x\"]\n").err().unwrap();
        assert!(e.message.contains("manifolds"), "{e}");
    }
}
