//! C ABI over the lattice/solver pipeline.
//!
//! All functions exchange JSON strings (NUL-terminated, UTF-8) and return
//! an integer status code; richer state (a completed solve) lives behind
//! an opaque handle. Strings returned through out-parameters must be
//! released with [`strominger_string_free`], handles with
//! [`strominger_solution_free`]. No function panics across the boundary.

use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use strominger::config::RunConfig;
use strominger::error::PipelineError;
use strominger::pipeline;
use strominger::solver::{SolverState, StepTrace};

/// Status codes returned by every fallible function.
#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StromingerStatus {
    /// Success.
    Ok = 0,
    /// Invalid configuration or usage.
    ConfigError = 1,
    /// Residual or feasibility failure (solver divergence, verification
    /// failure, integrability violation).
    FeasibilityError = 2,
    /// Null pointer or malformed string argument.
    InvalidArgument = 3,
    /// Internal panic caught at the boundary.
    InternalError = 4,
}

/// A completed continuation solve (opaque).
pub struct StromingerSolution {
    cfg: RunConfig,
    state: SolverState,
    trace: Vec<StepTrace>,
}

fn status_of(e: &PipelineError) -> StromingerStatus {
    match e.exit_code() {
        2 => StromingerStatus::FeasibilityError,
        _ => StromingerStatus::ConfigError,
    }
}

/// Store `text` into `*out` as a newly allocated C string.
fn set_out(out: *mut *mut c_char, text: String) {
    if out.is_null() {
        return;
    }
    // interior NULs cannot appear in serde_json output of our reports
    let c = CString::new(text).unwrap_or_else(|_| CString::new("invalid string").unwrap());
    unsafe { *out = c.into_raw() };
}

fn read_str<'a>(ptr: *const c_char) -> Result<&'a str, StromingerStatus> {
    if ptr.is_null() {
        return Err(StromingerStatus::InvalidArgument);
    }
    unsafe { CStr::from_ptr(ptr) }
        .to_str()
        .map_err(|_| StromingerStatus::InvalidArgument)
}

fn parse_config(json: &str) -> Result<RunConfig, PipelineError> {
    Ok(serde_json::from_str(json)?)
}

fn guarded(out: *mut *mut c_char, body: impl FnOnce() -> (StromingerStatus, String)) -> i32 {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok((status, text)) => {
            set_out(out, text);
            status as i32
        }
        Err(_) => {
            set_out(out, "internal panic".to_string());
            StromingerStatus::InternalError as i32
        }
    }
}

/// Library version as a static string; do not free.
#[no_mangle]
pub extern "C" fn strominger_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Release a string returned through an out-parameter.
#[no_mangle]
pub extern "C" fn strominger_string_free(s: *mut c_char) {
    if !s.is_null() {
        unsafe { drop(CString::from_raw(s)) };
    }
}

/// Run the exact lattice arithmetic of the `lattice` config section.
/// On success `*out_json` holds the report; on failure, the error message.
#[no_mangle]
pub extern "C" fn strominger_lattice_report(
    config_json: *const c_char,
    out_json: *mut *mut c_char,
) -> i32 {
    guarded(out_json, || {
        let text = match read_str(config_json) {
            Ok(t) => t,
            Err(s) => return (s, "null or non-UTF-8 config".to_string()),
        };
        match parse_config(text).and_then(|cfg| pipeline::lattice_report(&cfg)) {
            Ok(report) => (
                StromingerStatus::Ok,
                serde_json::to_string_pretty(&report).expect("report serializes"),
            ),
            Err(e) => (status_of(&e), e.to_string()),
        }
    })
}

/// Synthesize geometry data and report the integrability budget without
/// writing files. On success `*out_json` holds the synthesis summary.
#[no_mangle]
pub extern "C" fn strominger_synthesis_report(
    config_json: *const c_char,
    out_json: *mut *mut c_char,
) -> i32 {
    guarded(out_json, || {
        let text = match read_str(config_json) {
            Ok(t) => t,
            Err(s) => return (s, "null or non-UTF-8 config".to_string()),
        };
        let run = || -> Result<String, PipelineError> {
            let cfg = parse_config(text)?;
            let gc = cfg.geometry.as_ref().ok_or_else(|| {
                PipelineError::Config("config is missing the `geometry` section".to_string())
            })?;
            let grid = strominger::grid::PeriodicGrid::new(gc.n)
                .map_err(|e| PipelineError::Config(e.to_string()))?;
            let s = strominger::synth::synthesize(
                grid,
                gc.omega1,
                gc.omega2,
                &gc.charges,
                gc.alpha_rat()?,
            )?;
            Ok(serde_json::to_string_pretty(&s.integrability)?)
        };
        match run() {
            Ok(json) => (StromingerStatus::Ok, json),
            Err(e) => (status_of(&e), e.to_string()),
        }
    })
}

/// Run the continuation solve described by the config. On success the
/// solution is returned through `out_solution` as an opaque handle.
#[no_mangle]
pub extern "C" fn strominger_solve(
    config_json: *const c_char,
    out_solution: *mut *mut StromingerSolution,
    out_error: *mut *mut c_char,
) -> i32 {
    if out_solution.is_null() {
        set_out(out_error, "out_solution is null".to_string());
        return StromingerStatus::InvalidArgument as i32;
    }
    unsafe { *out_solution = ptr::null_mut() };
    match catch_unwind(AssertUnwindSafe(|| {
        let text = match read_str(config_json) {
            Ok(t) => t,
            Err(s) => return Err((s, "null or non-UTF-8 config".to_string())),
        };
        let cfg = parse_config(text).map_err(|e| (status_of(&e), e.to_string()))?;
        let (state, trace, _, _) =
            pipeline::run_solve(&cfg).map_err(|e| (status_of(&e), e.to_string()))?;
        Ok(StromingerSolution { cfg, state, trace })
    })) {
        Ok(Ok(sol)) => {
            unsafe { *out_solution = Box::into_raw(Box::new(sol)) };
            StromingerStatus::Ok as i32
        }
        Ok(Err((status, msg))) => {
            set_out(out_error, msg);
            status as i32
        }
        Err(_) => {
            set_out(out_error, "internal panic".to_string());
            StromingerStatus::InternalError as i32
        }
    }
}

/// Summarize a completed solve as JSON (final t, residual, iteration trace).
#[no_mangle]
pub extern "C" fn strominger_solution_summary(
    solution: *const StromingerSolution,
    out_json: *mut *mut c_char,
) -> i32 {
    guarded(out_json, || {
        if solution.is_null() {
            return (StromingerStatus::InvalidArgument, "solution is null".to_string());
        }
        let sol = unsafe { &*solution };
        #[derive(serde::Serialize)]
        struct Summary<'a> {
            t: f64,
            residual_norm: f64,
            newton_iterations: usize,
            trace: &'a [StepTrace],
        }
        let s = Summary {
            t: sol.state.t,
            residual_norm: sol.state.residual_norm,
            newton_iterations: sol.state.newton_iterations,
            trace: &sol.trace,
        };
        (
            StromingerStatus::Ok,
            serde_json::to_string_pretty(&s).expect("summary serializes"),
        )
    })
}

/// Evaluate the full residual set at the solved u. Returns Ok and the
/// report JSON when all residuals pass, FeasibilityError (report still
/// written) when any fails.
#[no_mangle]
pub extern "C" fn strominger_verify(
    solution: *const StromingerSolution,
    out_json: *mut *mut c_char,
) -> i32 {
    guarded(out_json, || {
        if solution.is_null() {
            return (StromingerStatus::InvalidArgument, "solution is null".to_string());
        }
        let sol = unsafe { &*solution };
        match pipeline::verification_report(&sol.cfg, &sol.state.u) {
            Ok(report) => {
                let json = serde_json::to_string_pretty(&report).expect("report serializes");
                if report.pass {
                    (StromingerStatus::Ok, json)
                } else {
                    (StromingerStatus::FeasibilityError, json)
                }
            }
            Err(e) => (status_of(&e), e.to_string()),
        }
    })
}

/// Release a solution handle.
#[no_mangle]
pub extern "C" fn strominger_solution_free(solution: *mut StromingerSolution) {
    if !solution.is_null() {
        unsafe { drop(Box::from_raw(solution)) };
    }
}
