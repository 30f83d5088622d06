//! Machine-readable run reports.

use serde::Serialize;

use super::checks::{Bound, Residual};

/// Residuals and tolerances are written with 17 significant digits.
pub fn decimal(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_pass(pass: bool) -> Self {
        if pass {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualReport {
    pub name: String,
    pub value: String,
    pub tol: String,
    pub bound: Bound,
    pub verdict: Verdict,
}

impl From<&Residual> for ResidualReport {
    fn from(r: &Residual) -> Self {
        Self {
            name: r.name.clone(),
            value: decimal(r.value),
            tol: decimal(r.tol),
            bound: r.bound,
            verdict: Verdict::from_pass(r.passes()),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub index: usize,
    pub name: String,
    pub kind: String,
    pub subject: String,
    pub anchor: Option<String>,
    pub seed: u64,
    pub points: usize,
    pub grid: Option<Vec<usize>>,
    pub verdict: Verdict,
    pub residuals: Vec<ResidualReport>,
    pub warnings: Vec<String>,
    pub error: Option<String>,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub scenario: Option<String>,
    pub anchor: Option<String>,
    pub seed: u64,
    pub tol_scale: f64,
    pub verdict: Verdict,
    pub checks: Vec<CheckReport>,
    pub wall_time_s: f64,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One line per check, then one per residual.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            out.push_str(&format!("{} {} [{} on {}]\n", c.verdict.label(), c.name, c.kind, c.subject));
            for r in &c.residuals {
                let op = match r.bound {
                    Bound::Upper => "<=",
                    Bound::Lower => ">=",
                };
                out.push_str(&format!("    {} = {} ({op} {})\n", r.name, r.value, r.tol));
            }
            for w in &c.warnings {
                out.push_str(&format!("    warning: {w}\n"));
            }
            if let Some(e) = &c.error {
                out.push_str(&format!("    error: {e}\n"));
            }
        }
        let passed = self.checks.iter().filter(|c| c.verdict == Verdict::Pass).count();
        out.push_str(&format!("{} {passed}/{} checks passed\n", self.verdict.label(), self.checks.len()));
        out
    }
}
