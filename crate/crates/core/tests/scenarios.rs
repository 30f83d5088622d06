use bitensor_core::scenario::builtin::{self, BUILTINS};
use bitensor_core::scenario::{self, checks, Config, RunOptions, Verdict};

#[test]
fn every_builtin_scenario_passes() {
    for b in BUILTINS {
        let cfg = b.config().unwrap();
        let report = scenario::run(&cfg, &RunOptions::default()).unwrap();
        assert!(report.passed(), "{}\n{}", b.name, report.summary());
        assert!(report.anchor.as_deref().is_some_and(|a| !a.is_empty()));
        assert!(report.checks.iter().all(|c| !c.residuals.is_empty()));
    }
}

#[test]
fn required_scenarios_are_listed_in_order() {
    let names: Vec<_> = builtin::list_scenarios().into_iter().map(|(n, _)| n).collect();
    for want in [
        "small-sphere-inclusion",
        "warped-product-projection",
        "cubic-curve-s2",
        "sphere-family-s2-lambda",
        "homothety-law",
        "conformal-surface-law",
        "gauss-oracle-corpus",
        "sphere-willmore",
        "clifford-willmore",
        "cylinder-negative-witness",
        "gauss-bonnet-integrals",
        "killing-fields",
    ] {
        assert!(names.contains(&want), "{want}");
    }
}

#[test]
fn grid_override_reaches_quadrature_checks() {
    let cfg = builtin::find("gauss-bonnet-integrals").unwrap().config().unwrap();
    let opts = RunOptions {
        grid: Some(16),
        ..RunOptions::default()
    };
    let report = scenario::run(&cfg, &opts).unwrap();
    for c in &report.checks {
        assert_eq!(c.grid.as_deref(), Some(&[16, 16][..]));
    }
    let coarse = RunOptions {
        grid: Some(2),
        ..RunOptions::default()
    };
    let report = scenario::run(&cfg, &coarse).unwrap();
    assert_eq!(report.verdict, Verdict::Fail);
}

#[test]
fn negative_witness_fails_when_asserted_to_hold() {
    let text = builtin::find("cylinder-negative-witness")
        .unwrap()
        .source
        .replacen("expect = \"fail\"", "expect = \"hold\"", 1);
    let cfg = Config::from_toml(&text).unwrap();
    let report = scenario::run(&cfg, &RunOptions::default()).unwrap();
    assert_eq!(report.checks[0].verdict, Verdict::Fail);
}

#[test]
fn conformal_hypothesis_violation_is_a_warning() {
    let text = r#"
[manifold.D]
coords = ["x", "y"]
domain = [[-1, 1], [-1, 1]]
metric = ["1", "0", "1"]

[manifold.R3]
coords = ["a", "b", "c"]
euclidean = true

[map.graph]
from = "D"
to = "R3"
components = ["x", "y", "x^2 + x*y^2"]

[[check]]
kind = "conformal-law"
subject = "graph"
rho = "0.2*x"
"#;
    let cfg = Config::from_toml(text).unwrap();
    let report = scenario::run(&cfg, &RunOptions::default()).unwrap();
    assert!(report.checks[0].warnings.iter().any(|w| w.contains("orthogonality")));
}

#[test]
fn validation_errors_name_the_key() {
    let base = r#"
[manifold.S2]
coords = ["th", "ph"]
domain = [[0, "pi"], [0, "2*pi", true]]
metric = ["1", "0", "sin(th)^2"]

[[check]]
kind = "killing"
subject = "S2"
field = ["0", "1"]
"#;
    Config::from_toml(base).unwrap();
    let cases = [
        (base.replace("field = [\"0\", \"1\"]", "field = [\"0\"]"), "check[0].field"),
        (base.replace("field = [\"0\", \"1\"]", "field = [\"0\", \"q\"]"), "check[0].field[1]"),
        (base.replace("field = [\"0\", \"1\"]", ""), "check[0].field"),
        (base.replace("subject = \"S2\"", "subject = \"S9\""), "check[0].subject"),
        (format!("{base}bogus = 1\n"), "check[0].bogus"),
        (format!("{base}points = [[0.5]]\n"), "check[0].points[0]"),
        (base.replace("[0, \"pi\"]", "[1, 0]"), "manifold.S2.domain[0]"),
    ];
    for (text, key) in cases {
        let e = Config::from_toml(&text).err().unwrap_or_else(|| panic!("{key} accepted"));
        assert_eq!(e.key, key, "{e}");
    }
}

#[test]
fn registry_kinds_are_unique() {
    let mut names: Vec<_> = checks::REGISTRY.iter().map(|k| k.name).collect();
    let n = names.len();
    names.sort();
    names.dedup();
    assert_eq!(names.len(), n);
}
