//! C interface to obliqua.
//!
//! Every fallible function returns an [`ObStatus`]; on anything but
//! `OB_STATUS_OK` the message is available from [`ob_last_error`] on the
//! same thread. Objects are opaque handles released by their `_free`
//! function, and strings handed out are released by [`ob_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use obliqua::conditions::{overall, Status};
use obliqua::scenario::{Construction, Scenario};
use obliqua::sim::PathRecord;
use obliqua::stats::ks_statistic;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ObStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// The scenario or a run parameter is malformed.
    Config = 3,
    /// A path failed; the message names the path id.
    Simulation = 4,
    /// An argument is out of range.
    Argument = 5,
    /// A Rust panic was caught at the boundary.
    Panic = 6,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ObConstruction {
    Direct = 0,
    Controlled = 1,
    Localized = 2,
}

impl From<ObConstruction> for Construction {
    fn from(c: ObConstruction) -> Self {
        match c {
            ObConstruction::Direct => Construction::Direct,
            ObConstruction::Controlled => Construction::Controlled,
            ObConstruction::Localized => Construction::Localized,
        }
    }
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ObCheckStatus {
    Pass = 0,
    Fail = 1,
    Inconclusive = 2,
}

/// A loaded scenario.
pub struct ObScenario {
    inner: Scenario,
}

/// One simulated path on its time grid.
pub struct ObPath {
    inner: PathRecord,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

type Failure = (ObStatus, String);

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

/// Runs `f`, records its error message and turns panics into
/// `OB_STATUS_PANIC`.
fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> ObStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            ObStatus::Ok
        }
        Ok(Err((code, msg))) => {
            set_error(&msg);
            code
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_error(&format!("internal error: {msg}"));
            ObStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    (ObStatus::NullPointer, format!("{what} is null"))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|e| (ObStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

fn config(e: impl std::fmt::Display) -> Failure {
    (ObStatus::Config, e.to_string())
}

fn to_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map_or(ptr::null_mut(), CString::into_raw)
}

/// Message of the last failed call on this thread; empty after a
/// successful one. Valid until the next call into the library.
#[no_mangle]
pub extern "C" fn ob_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn ob_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ob_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Load a scenario file. The tolerance preset follows
/// `OBLIQUA_TOL_PROFILE`.
///
/// # Safety
/// `path` must be a nul-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ob_scenario_load(path: *const c_char, out: *mut *mut ObScenario) -> ObStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let sc = Scenario::load(text(path, "path")?).map_err(config)?;
        *out = Box::into_raw(Box::new(ObScenario { inner: sc }));
        Ok(())
    })
}

/// Parse scenario text with the named tolerance profile (`default`,
/// `strict` or `loose`).
///
/// # Safety
/// `toml` and `profile` must be nul-terminated strings and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ob_scenario_parse(toml: *const c_char, profile: *const c_char, out: *mut *mut ObScenario) -> ObStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let sc = Scenario::parse(text(toml, "toml")?, "scenario", text(profile, "profile")?).map_err(config)?;
        *out = Box::into_raw(Box::new(ObScenario { inner: sc }));
        Ok(())
    })
}

/// # Safety
/// `sc` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ob_scenario_free(sc: *mut ObScenario) {
    if !sc.is_null() {
        drop(Box::from_raw(sc));
    }
}

/// Replace the horizon and grid step of the scenario's run settings.
///
/// # Safety
/// `sc` must be a live scenario handle.
#[no_mangle]
pub unsafe extern "C" fn ob_scenario_set_grid(sc: *mut ObScenario, horizon: f64, dt: f64) -> ObStatus {
    guard(|| {
        let sc = sc.as_mut().ok_or_else(|| null("scenario"))?;
        let mut run = sc.inner.run.clone();
        run.horizon = horizon;
        run.dt = dt;
        run.validate().map_err(|e| (ObStatus::Argument, e.to_string()))?;
        sc.inner.run = run;
        Ok(())
    })
}

/// Run every condition check. Writes the overall status and, if
/// `out_json` is not null, the reports as a JSON array to free with
/// [`ob_string_free`].
///
/// # Safety
/// `sc` must be a live scenario handle, `status` writable and `out_json`
/// null or writable.
#[no_mangle]
pub unsafe extern "C" fn ob_scenario_check(sc: *const ObScenario, status: *mut ObCheckStatus, out_json: *mut *mut c_char) -> ObStatus {
    guard(|| {
        let sc = handle(sc, "scenario")?;
        if status.is_null() {
            return Err(null("status"));
        }
        let reports = sc.inner.checks().map_err(config)?;
        *status = match overall(&reports) {
            Status::Pass => ObCheckStatus::Pass,
            Status::Fail => ObCheckStatus::Fail,
            Status::Inconclusive => ObCheckStatus::Inconclusive,
        };
        if !out_json.is_null() {
            *out_json = to_c_string(serde_json::to_string(&reports).expect("reports serialize"));
        }
        Ok(())
    })
}

/// Terminal states of paths `0..n_paths` into `x1[i]`, `x2[i]` and, if
/// not null, `lambda[i]`, each of length `n_paths`. Results do not depend
/// on how many threads run them.
///
/// # Safety
/// `sc` must be a live scenario handle and the buffers must hold
/// `n_paths` doubles.
#[no_mangle]
pub unsafe extern "C" fn ob_simulate_terminals(
    sc: *const ObScenario,
    construction: ObConstruction,
    seed: u64,
    n_paths: u64,
    x1: *mut f64,
    x2: *mut f64,
    lambda: *mut f64,
) -> ObStatus {
    guard(|| {
        let sc = handle(sc, "scenario")?;
        if x1.is_null() || x2.is_null() {
            return Err(null("output buffer"));
        }
        let ts = sc
            .inner
            .engine()
            .terminals(construction.into(), seed, n_paths, sc.inner.run.dt)
            .map_err(|e| (ObStatus::Simulation, e.to_string()))?;
        for (i, t) in ts.iter().enumerate() {
            *x1.add(i) = t.x.x;
            *x2.add(i) = t.x.y;
            if !lambda.is_null() {
                *lambda.add(i) = t.lambda;
            }
        }
        Ok(())
    })
}

/// Simulate the full record of one path.
///
/// # Safety
/// `sc` must be a live scenario handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ob_path_simulate(
    sc: *const ObScenario,
    construction: ObConstruction,
    seed: u64,
    path_id: u64,
    out: *mut *mut ObPath,
) -> ObStatus {
    guard(|| {
        let sc = handle(sc, "scenario")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let rec = sc
            .inner
            .engine()
            .record(construction.into(), seed, path_id, sc.inner.run.dt)
            .map_err(|e| (ObStatus::Simulation, e.to_string()))?;
        *out = Box::into_raw(Box::new(ObPath { inner: rec }));
        Ok(())
    })
}

/// Number of grid points, including time 0. Zero for a null handle.
///
/// # Safety
/// `p` must be null or a live path handle.
#[no_mangle]
pub unsafe extern "C" fn ob_path_len(p: *const ObPath) -> usize {
    p.as_ref().map_or(0, |p| p.inner.len())
}

/// Time, state and local time at grid point `k`.
///
/// # Safety
/// `p` must be a live path handle; the outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn ob_path_point(p: *const ObPath, k: usize, t: *mut f64, x1: *mut f64, x2: *mut f64, lambda: *mut f64) -> ObStatus {
    guard(|| {
        let r = &handle(p, "path")?.inner;
        if t.is_null() || x1.is_null() || x2.is_null() || lambda.is_null() {
            return Err(null("output"));
        }
        if k >= r.len() {
            return Err((ObStatus::Argument, format!("index {k} out of range for a path of {} points", r.len())));
        }
        (*t, *x1, *x2, *lambda) = (r.t(k), r.x[k].x, r.x[k].y, r.lambda[k]);
        Ok(())
    })
}

/// The path as CSV text, to free with [`ob_string_free`].
///
/// # Safety
/// `p` must be a live path handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ob_path_csv(p: *const ObPath, out: *mut *mut c_char) -> ObStatus {
    guard(|| {
        let r = &handle(p, "path")?.inner;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = to_c_string(r.to_csv());
        Ok(())
    })
}

/// # Safety
/// `p` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ob_path_free(p: *mut ObPath) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Two-sample Kolmogorov-Smirnov distance.
///
/// # Safety
/// `a` and `b` must hold `na` and `nb` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ob_ks_statistic(a: *const f64, na: usize, b: *const f64, nb: usize, out: *mut f64) -> ObStatus {
    guard(|| {
        if a.is_null() || b.is_null() || out.is_null() {
            return Err(null("argument"));
        }
        let (a, b) = (std::slice::from_raw_parts(a, na), std::slice::from_raw_parts(b, nb));
        *out = ks_statistic(a, b).map_err(|e| (ObStatus::Argument, e.to_string()))?;
        Ok(())
    })
}
