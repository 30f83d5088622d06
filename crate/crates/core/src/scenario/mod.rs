//! Scenario configs, the check registry, builtin scenarios and reports.

pub mod builtin;
pub mod checks;
pub mod config;
pub mod report;

use std::time::Instant;

use rayon::prelude::*;

pub use config::{Config, ConfigError};
pub use report::{CheckReport, RunReport, Verdict};

use checks::Ctx;
use config::CheckSpec;
use report::ResidualReport;

#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Run only checks tagged with this scenario (or all, if it names the config).
    pub scenario: Option<String>,
    /// Node count per axis for every quadrature check.
    pub grid: Option<usize>,
    pub tol_scale: f64,
    pub parallel: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            scenario: None,
            grid: None,
            tol_scale: 1.0,
            parallel: false,
        }
    }
}

/// splitmix64 step, used to derive per-check seeds.
fn mix(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn selected<'a>(cfg: &'a Config, opts: &RunOptions) -> Result<Vec<(usize, &'a CheckSpec)>, ConfigError> {
    let all: Vec<_> = cfg.raw.check.iter().enumerate().collect();
    let Some(want) = &opts.scenario else {
        return Ok(all);
    };
    if cfg.raw.scenario.as_ref().is_some_and(|s| &s.name == want) {
        return Ok(all);
    }
    let picked: Vec<_> = all
        .into_iter()
        .filter(|(_, c)| c.scenario.as_deref() == Some(want.as_str()))
        .collect();
    if picked.is_empty() {
        return Err(ConfigError::new("--scenario", format!("no checks tagged `{want}`")));
    }
    Ok(picked)
}

fn run_one(cfg: &Config, index: usize, spec: &CheckSpec, opts: &RunOptions) -> CheckReport {
    let start = Instant::now();
    let seed = mix(cfg.seed(), index as u64);
    let ctx = Ctx::new(&cfg.workspace, spec, opts.tol_scale, opts.grid, seed);
    let (residuals, warnings, error) = match ctx.run() {
        Ok(o) => (o.residuals, o.warnings, None),
        Err(e) => (Vec::new(), Vec::new(), Some(e.to_string())),
    };
    let pass = error.is_none() && !residuals.is_empty() && residuals.iter().all(|r| r.passes());
    CheckReport {
        index,
        name: spec.name.clone().unwrap_or_else(|| format!("{}:{}", spec.kind, spec.subject)),
        kind: spec.kind.clone(),
        subject: spec.subject.clone(),
        anchor: spec
            .anchor
            .clone()
            .or_else(|| cfg.raw.scenario.as_ref().map(|s| s.anchor.clone())),
        seed,
        points: if ctx.kind.uses_grid() { 0 } else { ctx.points.len() },
        grid: ctx.grid.clone(),
        verdict: Verdict::from_pass(pass),
        residuals: residuals.iter().map(ResidualReport::from).collect(),
        warnings,
        error,
        wall_time_s: start.elapsed().as_secs_f64(),
    }
}

/// Runs the selected checks of a validated config.
pub fn run(cfg: &Config, opts: &RunOptions) -> Result<RunReport, ConfigError> {
    if !(opts.tol_scale > 0.0) {
        return Err(ConfigError::new("--tol-scale", "must be positive"));
    }
    if opts.grid == Some(0) {
        return Err(ConfigError::new("--grid", "must be positive"));
    }
    let start = Instant::now();
    let picked = selected(cfg, opts)?;
    let checks: Vec<CheckReport> = if opts.parallel {
        picked.par_iter().map(|(i, c)| run_one(cfg, *i, c, opts)).collect()
    } else {
        picked.iter().map(|(i, c)| run_one(cfg, *i, c, opts)).collect()
    };
    let pass = !checks.is_empty() && checks.iter().all(|c| c.verdict == Verdict::Pass);
    Ok(RunReport {
        scenario: opts
            .scenario
            .clone()
            .or_else(|| cfg.raw.scenario.as_ref().map(|s| s.name.clone())),
        anchor: cfg.raw.scenario.as_ref().map(|s| s.anchor.clone()),
        seed: cfg.seed(),
        tol_scale: opts.tol_scale,
        verdict: Verdict::from_pass(pass),
        checks,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Geometry(#[from] crate::GeometryError),
}

/// Parses `name=value,…` against a coordinate list; values may be constant expressions.
pub fn parse_point(cfg: &Config, at: &str, coords: &[String]) -> Result<Vec<f64>, ConfigError> {
    let mut out = vec![None; coords.len()];
    for item in at.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (name, value) = item
            .split_once('=')
            .ok_or_else(|| ConfigError::new("--at", format!("expected name=value, found `{item}`")))?;
        let name = name.trim();
        let i = coords
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| ConfigError::new("--at", format!("unknown coordinate `{name}`; expected one of {coords:?}")))?;
        let e = cfg.workspace.parse_expr("--at", value.trim(), &[])?;
        out[i] = Some(e.as_const().ok_or_else(|| ConfigError::new("--at", format!("`{value}` is not a constant")))?);
    }
    out.into_iter()
        .zip(coords)
        .map(|(v, c)| v.ok_or_else(|| ConfigError::new("--at", format!("missing coordinate `{c}`"))))
        .collect()
}

/// Every pointwise tensor of a map (and, for immersions, of the submanifold) as JSON.
pub fn eval_point(cfg: &Config, name: &str, at: &str) -> Result<serde_json::Value, EvalError> {
    let ws = &cfg.workspace;
    let map = ws
        .map_subject(name)
        .ok_or_else(|| ConfigError::new("--map", format!("unknown map or immersion `{name}`")))?;
    let p = parse_point(cfg, at, map.source().coords())?;
    let (data, stress) = map.point_data_and_stress(&p)?;
    let geometry = map.source().point_eval(&p)?;
    let mut out = serde_json::json!({
        "name": name,
        "coords": map.source().coords(),
        "source": geometry,
        "map": data,
        "stress": stress,
    });
    if let Some(imm) = ws.immersions.get(name) {
        out["immersion"] = serde_json::to_value(imm.point_data(&p)?).expect("serializable");
    }
    Ok(out)
}
