//! C ABI over the expression engine, scenario configs and the check runner.
//!
//! Every fallible function returns a `BtStatus`; on failure the message is
//! available from `bt_last_error_message` until the next call on the same
//! thread. Strings returned through out-pointers are owned by the caller and
//! released with `bt_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use bitensor_core::scenario::{self, builtin, Config, EvalError, RunOptions};
use bitensor_core::{parse, Expr};

#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Eval = 4,
    Config = 5,
    Geometry = 6,
    NotFound = 7,
    Panic = 8,
}

/// A parsed expression together with its ordered variable list.
pub struct BtExpr {
    expr: Expr,
    vars: Vec<String>,
}

/// A validated scenario configuration.
pub struct BtConfig {
    config: Config,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).expect("nul bytes removed"));
}

type Failure = (BtStatus, String);

fn guard<F>(f: F) -> i32
where
    F: FnOnce() -> Result<(), Failure>,
{
    let status = match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            BtStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            BtStatus::Panic
        }
    };
    status as i32
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err((BtStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (BtStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err((BtStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("nul bytes removed").into_raw()
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn bt_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Parses `source` over the `n_vars` variable names in `vars`.
///
/// # Safety
/// `source` and each of `vars[0..n_vars]` must be NUL-terminated strings;
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bt_expr_parse(
    source: *const c_char,
    vars: *const *const c_char,
    n_vars: usize,
    out: *mut *mut BtExpr,
) -> i32 {
    guard(|| {
        non_null(out, "out")?;
        let src = str_arg(source, "source")?;
        if n_vars > 0 {
            non_null(vars, "vars")?;
        }
        let names = (0..n_vars)
            .map(|i| str_arg(*vars.add(i), "variable name").map(str::to_owned))
            .collect::<Result<Vec<_>, _>>()?;
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let expr = parse(src, &refs).map_err(|e| (BtStatus::Parse, e.to_string()))?;
        *out = Box::into_raw(Box::new(BtExpr { expr, vars: names }));
        Ok(())
    })
}

/// Evaluates at `values`, given in the order the variables were declared.
///
/// # Safety
/// `expr` must come from this library; `values` must hold `n_values` doubles.
#[no_mangle]
pub unsafe extern "C" fn bt_expr_eval(
    expr: *const BtExpr,
    values: *const f64,
    n_values: usize,
    out: *mut f64,
) -> i32 {
    guard(|| {
        non_null(expr, "expr")?;
        non_null(out, "out")?;
        let e = &*expr;
        if n_values != e.vars.len() {
            return Err((
                BtStatus::Eval,
                format!("expected {} values, found {n_values}", e.vars.len()),
            ));
        }
        let vals: &[f64] = if n_values == 0 {
            &[]
        } else {
            non_null(values, "values")?;
            std::slice::from_raw_parts(values, n_values)
        };
        let bind: Vec<(&str, f64)> = e.vars.iter().map(String::as_str).zip(vals.iter().copied()).collect();
        *out = e.expr.eval(&bind).map_err(|err| (BtStatus::Eval, err.to_string()))?;
        Ok(())
    })
}

/// Symbolic partial derivative with respect to `var`.
///
/// # Safety
/// `expr` must come from this library; `var` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn bt_expr_differentiate(
    expr: *const BtExpr,
    var: *const c_char,
    out: *mut *mut BtExpr,
) -> i32 {
    guard(|| {
        non_null(expr, "expr")?;
        non_null(out, "out")?;
        let e = &*expr;
        let v = str_arg(var, "var")?;
        if !e.vars.iter().any(|x| x == v) {
            return Err((BtStatus::NotFound, format!("`{v}` is not a declared variable")));
        }
        *out = Box::into_raw(Box::new(BtExpr {
            expr: e.expr.differentiate(v),
            vars: e.vars.clone(),
        }));
        Ok(())
    })
}

/// Canonical text of an expression.
///
/// # Safety
/// `expr` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bt_expr_to_string(expr: *const BtExpr, out: *mut *mut c_char) -> i32 {
    guard(|| {
        non_null(expr, "expr")?;
        non_null(out, "out")?;
        *out = into_c_string((*expr).expr.to_string());
        Ok(())
    })
}

/// # Safety
/// `expr` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bt_expr_free(expr: *mut BtExpr) {
    if !expr.is_null() {
        drop(Box::from_raw(expr));
    }
}

/// Loads and validates a config file.
///
/// # Safety
/// `path` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bt_config_load(path: *const c_char, out: *mut *mut BtConfig) -> i32 {
    guard(|| {
        non_null(out, "out")?;
        let p = str_arg(path, "path")?;
        let config = Config::load(std::path::Path::new(p)).map_err(|e| (BtStatus::Config, e.to_string()))?;
        *out = Box::into_raw(Box::new(BtConfig { config }));
        Ok(())
    })
}

/// Parses and validates config text.
///
/// # Safety
/// `text` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bt_config_parse(text: *const c_char, out: *mut *mut BtConfig) -> i32 {
    guard(|| {
        non_null(out, "out")?;
        let t = str_arg(text, "text")?;
        let config = Config::from_toml(t).map_err(|e| (BtStatus::Config, e.to_string()))?;
        *out = Box::into_raw(Box::new(BtConfig { config }));
        Ok(())
    })
}

/// # Safety
/// `config` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bt_config_free(config: *mut BtConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Pointwise tensors of a map or immersion as JSON; `at` is `name=value,…`.
///
/// # Safety
/// Pointers must be valid; `out` receives a string to release with `bt_string_free`.
#[no_mangle]
pub unsafe extern "C" fn bt_map_eval_json(
    config: *const BtConfig,
    map: *const c_char,
    at: *const c_char,
    out: *mut *mut c_char,
) -> i32 {
    guard(|| {
        non_null(config, "config")?;
        non_null(out, "out")?;
        let name = str_arg(map, "map")?;
        let at = str_arg(at, "at")?;
        let v = scenario::eval_point(&(*config).config, name, at).map_err(|e| match e {
            EvalError::Config(c) => (BtStatus::Config, c.to_string()),
            EvalError::Geometry(g) => (BtStatus::Geometry, g.to_string()),
        })?;
        *out = into_c_string(serde_json::to_string(&v).expect("json"));
        Ok(())
    })
}

fn run_config(cfg: &Config, tol_scale: f64, report: *mut *mut c_char, passed: *mut bool) -> Result<(), Failure> {
    let opts = RunOptions {
        tol_scale,
        ..RunOptions::default()
    };
    let r = scenario::run(cfg, &opts).map_err(|e| (BtStatus::Config, e.to_string()))?;
    // SAFETY: callers checked both out-pointers
    unsafe {
        *passed = r.passed();
        *report = into_c_string(r.to_json());
    }
    Ok(())
}

/// Runs every check of a config. `passed` reports the verdict; the JSON
/// report is written to `report`.
///
/// # Safety
/// Pointers must be valid and writable.
#[no_mangle]
pub unsafe extern "C" fn bt_run_config(
    config: *const BtConfig,
    tol_scale: f64,
    report: *mut *mut c_char,
    passed: *mut bool,
) -> i32 {
    guard(|| {
        non_null(config, "config")?;
        non_null(report, "report")?;
        non_null(passed, "passed")?;
        run_config(&(*config).config, tol_scale, report, passed)
    })
}

/// Runs a builtin scenario by name.
///
/// # Safety
/// `name` must be NUL-terminated; `report` and `passed` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bt_run_scenario(
    name: *const c_char,
    tol_scale: f64,
    report: *mut *mut c_char,
    passed: *mut bool,
) -> i32 {
    guard(|| {
        non_null(report, "report")?;
        non_null(passed, "passed")?;
        let n = str_arg(name, "name")?;
        let b = builtin::find(n).ok_or_else(|| (BtStatus::NotFound, format!("no builtin scenario `{n}`")))?;
        let cfg = b.config().map_err(|e| (BtStatus::Config, e.to_string()))?;
        run_config(&cfg, tol_scale, report, passed)
    })
}

/// Number of builtin scenarios.
#[no_mangle]
pub extern "C" fn bt_scenario_count() -> usize {
    builtin::BUILTINS.len()
}

/// Name of the `index`-th builtin scenario, or null when out of range.
/// The string is static and must not be freed.
#[no_mangle]
pub extern "C" fn bt_scenario_name(index: usize) -> *const c_char {
    static NAMES: std::sync::OnceLock<Vec<CString>> = std::sync::OnceLock::new();
    NAMES
        .get_or_init(|| {
            builtin::BUILTINS
                .iter()
                .map(|b| CString::new(b.name).expect("plain name"))
                .collect()
        })
        .get(index)
        .map_or(ptr::null(), |s| s.as_ptr())
}

/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bt_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
