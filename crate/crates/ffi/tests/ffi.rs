use std::ffi::{c_char, CStr, CString};
use std::ptr;

use bitensor::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(bt_last_error_message()) }.to_string_lossy().into_owned()
}

fn take(s: *mut c_char) -> String {
    let out = unsafe { CStr::from_ptr(s) }.to_string_lossy().into_owned();
    unsafe { bt_string_free(s) };
    out
}

fn parse(src: &str, vars: &[&str]) -> (i32, *mut BtExpr) {
    let src = CString::new(src).unwrap();
    let names: Vec<CString> = vars.iter().map(|v| CString::new(*v).unwrap()).collect();
    let ptrs: Vec<*const c_char> = names.iter().map(|c| c.as_ptr()).collect();
    let mut out = ptr::null_mut();
    let status = unsafe { bt_expr_parse(src.as_ptr(), ptrs.as_ptr(), ptrs.len(), &mut out) };
    (status, out)
}

#[test]
fn parse_eval_differentiate_round_trip() {
    let (status, e) = parse("x^2*sin(y)", &["x", "y"]);
    assert_eq!(status, BtStatus::Ok as i32);
    let mut v = 0.0;
    let at = [1.5, 0.3];
    assert_eq!(unsafe { bt_expr_eval(e, at.as_ptr(), 2, &mut v) }, 0);
    assert!((v - 2.25 * 0.3f64.sin()).abs() < 1e-15);

    let x = CString::new("x").unwrap();
    let mut d = ptr::null_mut();
    assert_eq!(unsafe { bt_expr_differentiate(e, x.as_ptr(), &mut d) }, 0);
    assert_eq!(unsafe { bt_expr_eval(d, at.as_ptr(), 2, &mut v) }, 0);
    assert!((v - 3.0 * 0.3f64.sin()).abs() < 1e-15);

    let mut s = ptr::null_mut();
    assert_eq!(unsafe { bt_expr_to_string(d, &mut s) }, 0);
    assert!(take(s).contains("sin(y)"));
    unsafe {
        bt_expr_free(d);
        bt_expr_free(e);
    }
}

#[test]
fn errors_set_codes_and_messages() {
    let (status, e) = parse("x + (", &["x"]);
    assert_eq!(status, BtStatus::Parse as i32);
    assert!(e.is_null());
    assert!(!last_error().is_empty());

    let (status, _) = parse("z", &["x"]);
    assert_eq!(status, BtStatus::Parse as i32);
    assert!(last_error().contains('z'));

    let mut out = ptr::null_mut();
    let status = unsafe { bt_expr_parse(ptr::null(), ptr::null(), 0, &mut out) };
    assert_eq!(status, BtStatus::NullPointer as i32);

    let (_, e) = parse("log(x)", &["x"]);
    let mut v = 0.0;
    let at = [-1.0];
    assert_eq!(unsafe { bt_expr_eval(e, at.as_ptr(), 1, &mut v) }, BtStatus::Eval as i32);
    assert_eq!(unsafe { bt_expr_eval(e, at.as_ptr(), 0, &mut v) }, BtStatus::Eval as i32);
    unsafe { bt_expr_free(e) };
}

const CONFIG: &str = r#"
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
points = 4
"#;

#[test]
fn config_eval_and_run() {
    let text = CString::new(CONFIG).unwrap();
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { bt_config_parse(text.as_ptr(), &mut cfg) }, 0);

    let (name, at) = (CString::new("incl").unwrap(), CString::new("th=0.7,ph=1.2").unwrap());
    let mut json = ptr::null_mut();
    assert_eq!(unsafe { bt_map_eval_json(cfg, name.as_ptr(), at.as_ptr(), &mut json) }, 0);
    let v: serde_json::Value = serde_json::from_str(&take(json)).unwrap();
    let tau: Vec<f64> = serde_json::from_value(v["map"]["tau"].clone()).unwrap();
    assert!((tau.iter().map(|t| t * t).sum::<f64>().sqrt() - 2.0).abs() < 1e-12);

    let mut report = ptr::null_mut();
    let mut passed = false;
    assert_eq!(unsafe { bt_run_config(cfg, 1.0, &mut report, &mut passed) }, 0);
    assert!(passed);
    assert!(take(report).contains("\"verdict\": \"pass\""));

    let bad = CString::new("incl2").unwrap();
    let status = unsafe { bt_map_eval_json(cfg, bad.as_ptr(), at.as_ptr(), &mut json) };
    assert_eq!(status, BtStatus::Config as i32);
    assert!(last_error().contains("incl2"));
    unsafe { bt_config_free(cfg) };
}

#[test]
fn unknown_manifold_is_a_config_error() {
    let text = CString::new(CONFIG.replace("to = \"R3\"", "to = \"Q\"")).unwrap();
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { bt_config_parse(text.as_ptr(), &mut cfg) }, BtStatus::Config as i32);
    assert!(cfg.is_null());
    assert!(last_error().contains("Q"));
}

#[test]
fn builtin_scenarios_are_exposed() {
    assert!(bt_scenario_count() >= 12);
    assert!(bt_scenario_name(bt_scenario_count()).is_null());
    let first = unsafe { CStr::from_ptr(bt_scenario_name(0)) }.to_str().unwrap().to_owned();
    let name = CString::new(first).unwrap();
    let mut report = ptr::null_mut();
    let mut passed = false;
    assert_eq!(unsafe { bt_run_scenario(name.as_ptr(), 1.0, &mut report, &mut passed) }, 0);
    assert!(passed, "{}", take(report));

    let missing = CString::new("no-such-scenario").unwrap();
    let status = unsafe { bt_run_scenario(missing.as_ptr(), 1.0, &mut report, &mut passed) };
    assert_eq!(status, BtStatus::NotFound as i32);
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/bitensor.h")).unwrap();
    for f in [
        "bt_last_error_message",
        "bt_expr_parse",
        "bt_expr_eval",
        "bt_expr_differentiate",
        "bt_expr_to_string",
        "bt_expr_free",
        "bt_config_load",
        "bt_config_parse",
        "bt_config_free",
        "bt_map_eval_json",
        "bt_run_config",
        "bt_run_scenario",
        "bt_scenario_count",
        "bt_scenario_name",
        "bt_string_free",
        "BT_STATUS_CONFIG",
    ] {
        assert!(header.contains(f), "{f} missing from header");
    }
}
