//! Exercise the C ABI from Rust: JSON in, status codes and JSON out,
//! opaque handle lifecycle, and error paths.

use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::ptr;

use strominger_ffi::*;

fn take_string(p: *mut c_char) -> String {
    assert!(!p.is_null());
    let s = unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string();
    strominger_string_free(p);
    s
}

#[test]
fn version_is_a_static_semver_string() {
    let v = unsafe { CStr::from_ptr(strominger_version()) }.to_str().unwrap();
    assert_eq!(v.split('.').count(), 3);
}

#[test]
fn lattice_report_round_trip() {
    let cfg = CString::new(
        r#"{ "lattice": { "name": "wci", "weights": [2,2,2,3,3], "degrees": [6,6],
             "num_A1": 9, "k_blown": 1 } }"#,
    )
    .unwrap();
    let mut out: *mut c_char = ptr::null_mut();
    let status = strominger_lattice_report(cfg.as_ptr(), &mut out);
    assert_eq!(status, 0);
    let report: serde_json::Value = serde_json::from_str(&take_string(out)).unwrap();
    assert_eq!(report["b2_orb"], 13);
    assert_eq!(report["euler"], 15);
    assert_eq!(report["h_self"], "1/2");
}

#[test]
fn config_errors_return_code_1_with_message() {
    let cfg = CString::new(r#"{ "bogus": true }"#).unwrap();
    let mut out: *mut c_char = ptr::null_mut();
    let status = strominger_lattice_report(cfg.as_ptr(), &mut out);
    assert_eq!(status, 1);
    assert!(take_string(out).contains("bogus"));
}

#[test]
fn null_arguments_return_code_3() {
    let mut out: *mut c_char = ptr::null_mut();
    assert_eq!(strominger_lattice_report(ptr::null(), &mut out), 3);
    strominger_string_free(out);
    assert_eq!(strominger_solution_summary(ptr::null(), &mut out), 3);
    strominger_string_free(out);
}

#[test]
fn synthesis_report_flags_unbalanced_charges_as_code_2() {
    let cfg = CString::new(
        r#"{ "geometry": { "n": 8, "omega1": [1,0,0], "omega2": [0,1,0],
             "charges": [[1,0,0],[-1,0,0]], "alpha_prime": "-1/1" } }"#,
    )
    .unwrap();
    let mut out: *mut c_char = ptr::null_mut();
    let status = strominger_synthesis_report(cfg.as_ptr(), &mut out);
    assert_eq!(status, 2);
    assert!(take_string(out).contains("integrability"));
}

#[test]
fn solve_verify_free_lifecycle() {
    let cfg = CString::new(
        r#"{ "geometry": { "n": 8, "omega1": [1,0,0], "omega2": [0,1,0],
             "charges": [[1,0,0],[-1,0,0],[0,1,0],[0,-1,0]], "alpha_prime": "-1/1" },
             "solver": { "delta": 2.0, "tau": 0.1, "t_steps": 2 } }"#,
    )
    .unwrap();
    let mut sol: *mut StromingerSolution = ptr::null_mut();
    let mut err: *mut c_char = ptr::null_mut();
    let status = strominger_solve(cfg.as_ptr(), &mut sol, &mut err);
    assert_eq!(status, 0, "{:?}", (!err.is_null()).then(|| take_string(err)));
    assert!(!sol.is_null());

    let mut out: *mut c_char = ptr::null_mut();
    assert_eq!(strominger_solution_summary(sol, &mut out), 0);
    let summary: serde_json::Value = serde_json::from_str(&take_string(out)).unwrap();
    assert_eq!(summary["t"], 1.0);

    assert_eq!(strominger_verify(sol, &mut out), 0);
    let report: serde_json::Value = serde_json::from_str(&take_string(out)).unwrap();
    assert_eq!(report["pass"], true);

    strominger_solution_free(sol);
}

#[test]
fn generated_header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/include/strominger.h"
    ))
    .expect("cbindgen header generated at build time");
    for sym in [
        "strominger_version",
        "strominger_lattice_report",
        "strominger_synthesis_report",
        "strominger_solve",
        "strominger_solution_summary",
        "strominger_verify",
        "strominger_solution_free",
        "strominger_string_free",
        "StromingerSolution",
        "StromingerStatus",
    ] {
        assert!(header.contains(sym), "header missing {sym}");
    }
}
