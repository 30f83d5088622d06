use std::process::Command;

fn bitensor(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_bitensor")).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

const SPHERE: &str = r#"
seed = 5

[manifold.S2]
coords = ["th", "ph"]
domain = [[0, "pi"], [0, "2*pi", true]]
metric = ["1", "0", "sin(th)^2"]

[manifold.R3]
coords = ["x", "y", "z"]
euclidean = true

[map.incl]
from = "S2"
to = "R3"
components = ["sin(th)*cos(ph)", "sin(th)*sin(ph)", "cos(th)"]

[[check]]
kind = "tension-norm"
subject = "incl"
expected = 2.0
scenario = "tension"

[[check]]
kind = "stress-lambda"
subject = "incl"
expected = 2.0
half_tau = true
scenario = "lambda"
"#;

fn write(dir: &tempfile::TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn list_scenarios_is_deterministic_and_anchored() {
    let (code, out, _) = bitensor(&["list-scenarios"]);
    assert_eq!(code, 0);
    assert!(out.lines().count() >= 12);
    let cubic = out.lines().find(|l| l.starts_with("cubic-curve-s2")).unwrap();
    assert!(cubic.contains("γ(t)=t³a"));
    let warped = out.lines().find(|l| l.starts_with("warped-product-projection")).unwrap();
    assert!(warped.contains("τ(π)=n grad(ln f)∘π"));
    assert_eq!(out, bitensor(&["list-scenarios"]).1);
}

#[test]
fn builtin_scenarios_pass() {
    for name in ["small-sphere-inclusion", "clifford-willmore"] {
        let (code, out, err) = bitensor(&["run", "--scenario", name]);
        assert_eq!(code, 0, "{name}\n{out}\n{err}");
    }
}

#[test]
fn undefined_manifold_exits_two_naming_it() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(&dir, "bad.toml", &SPHERE.replace("to = \"R3\"", "to = \"Q\""));
    let (code, _, err) = bitensor(&["run", &path]);
    assert_eq!(code, 2);
    assert!(err.contains("Q") && err.contains("map.incl.to"), "{err}");
}

#[test]
fn failing_check_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(&dir, "fail.toml", &SPHERE.replacen("expected = 2.0", "expected = 2.5", 1));
    let (code, out, _) = bitensor(&["run", &path, "--scenario", "tension"]);
    assert_eq!(code, 1, "{out}");
    assert!(out.contains("FAIL"));
}

#[test]
fn scenario_flag_filters_tagged_checks() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(&dir, "ok.toml", &SPHERE.replacen("expected = 2.0", "expected = 2.5", 1));
    let report = dir.path().join("r.json");
    let (code, _, err) = bitensor(&["run", &path, "--scenario", "lambda", "--report", report.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["checks"].as_array().unwrap().len(), 1);
    assert_eq!(v["checks"][0]["kind"], "stress-lambda");
    let (code, _, err) = bitensor(&["run", &path, "--scenario", "nothing"]);
    assert_eq!(code, 2);
    assert!(err.contains("nothing"));
}

#[test]
fn tol_scale_loosens_tolerances() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(&dir, "loose.toml", &SPHERE.replacen("expected = 2.0", "expected = 2.000001", 1));
    assert_eq!(bitensor(&["run", &path, "--scenario", "tension"]).0, 1);
    assert_eq!(bitensor(&["run", &path, "--scenario", "tension", "--tol-scale", "1e4"]).0, 0);
}

fn strip_timing(v: &mut serde_json::Value) {
    match v {
        serde_json::Value::Object(map) => {
            map.remove("wall_time_s");
            map.values_mut().for_each(strip_timing);
        }
        serde_json::Value::Array(a) => a.iter_mut().for_each(strip_timing),
        _ => {}
    }
}

#[test]
fn reports_are_reproducible_modulo_timing() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(&dir, "ok.toml", SPHERE);
    let run = |name: &str, parallel: bool| {
        let report = dir.path().join(name);
        let mut args = vec!["run", &path, "--report", report.to_str().unwrap()];
        if parallel {
            args.push("--parallel");
        }
        let (code, _, _) = bitensor(&args);
        assert_eq!(code, 0);
        let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
        strip_timing(&mut v);
        v
    };
    let a = run("a.json", false);
    assert_eq!(a, run("b.json", false));
    assert_eq!(a, run("c.json", true));
    let value = a["checks"][0]["residuals"][0]["value"].as_str().unwrap();
    assert!(value.contains('e') && value.split('e').next().unwrap().len() == 18, "{value}");
}

#[test]
fn eval_prints_pointwise_tensors() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(&dir, "ok.toml", SPHERE);
    let (code, out, err) = bitensor(&["eval", &path, "--at", "th=0.7,ph=1.2", "--map", "incl"]);
    assert_eq!(code, 0, "{err}");
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    for key in ["source", "map", "stress"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    let tau: Vec<f64> = serde_json::from_value(v["map"]["tau"].clone()).unwrap();
    assert!((tau.iter().map(|t| t * t).sum::<f64>().sqrt() - 2.0).abs() < 1e-12);

    let (code, _, err) = bitensor(&["eval", &path, "--at", "th=0.7", "--map", "incl"]);
    assert_eq!(code, 2);
    assert!(err.contains("ph"));
    let (code, _, err) = bitensor(&["eval", &path, "--at", "th=0.7,ph=1", "--map", "nope"]);
    assert_eq!(code, 2);
    assert!(err.contains("nope"));
}

#[test]
fn eval_includes_immersion_data() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"
[immersion.cyl]
coords = ["u", "v"]
domain = [[0, "2*pi", true], [-2, 2]]
embedding = ["cos(u)", "sin(u)", "v"]
"#;
    let path = write(&dir, "imm.toml", cfg);
    let (code, out, err) = bitensor(&["eval", &path, "--at", "u=pi/3,v=0.5", "--map", "cyl"]);
    assert_eq!(code, 0, "{err}");
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(v["immersion"]["h"].is_array());
}
