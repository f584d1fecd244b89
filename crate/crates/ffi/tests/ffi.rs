use std::ffi::{CStr, CString};
use std::ptr;

use bernoulli_lab_ffi::*;

fn params(p: f64, m: usize, l: usize) -> *mut BlParams {
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { bl_params_new(p, m, l, &mut out) }, BlStatus::Ok);
    out
}

fn body(json: &str, params: *const BlParams) -> *mut BlBody {
    let text = CString::new(json).unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { bl_body_from_json(text.as_ptr(), params, &mut out) }, BlStatus::Ok);
    out
}

fn values(b: *const BlBody) -> Vec<f64> {
    let n = unsafe { bl_body_len(b) };
    let mut v = vec![0.0; n];
    assert_eq!(unsafe { bl_body_values(b, v.as_mut_ptr(), n) }, BlStatus::Ok);
    v
}

fn last_error() -> Option<String> {
    let p = bl_last_error_message();
    (!p.is_null()).then(|| unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned())
}

#[test]
fn version_and_ball_constant() {
    let v = unsafe { CStr::from_ptr(bl_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
    assert_eq!(bl_lambda_ball(1.0, 2.0, 2), std::f64::consts::E);
    assert!(bl_lambda_ball(-1.0, 2.0, 2).is_nan());
}

#[test]
fn errors_set_status_and_message() {
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { bl_params_new(0.5, 32, 16, &mut out) }, BlStatus::InvalidInput);
    assert!(out.is_null());
    assert!(last_error().unwrap().starts_with("InvalidInput"));

    assert_eq!(unsafe { bl_params_new(2.0, 32, 16, ptr::null_mut()) }, BlStatus::InvalidArgument);
    assert!(last_error().unwrap().contains("out"));

    let pr = params(2.0, 32, 16);
    assert!(last_error().is_none());
    let bad = CString::new(r#"{"blob":{}}"#).unwrap();
    let mut b = ptr::null_mut();
    assert_eq!(unsafe { bl_body_from_json(bad.as_ptr(), pr, &mut b) }, BlStatus::InvalidInput);
    assert_eq!(unsafe { bl_params_set_newton_tol(pr, -1.0) }, BlStatus::InvalidInput);

    let disk = body(r#"{"disk":{"R":1}}"#, pr);
    let mut short = [0.0; 4];
    assert_eq!(unsafe { bl_body_values(disk, short.as_mut_ptr(), 4) }, BlStatus::InvalidArgument);

    let other = params(2.0, 64, 16);
    let small = body(r#"{"disk":{"R":0.5}}"#, other);
    let mut ring = ptr::null_mut();
    assert_eq!(unsafe { bl_solve_ring(disk, small, pr, &mut ring) }, BlStatus::GridMismatch);
    assert!(ring.is_null());

    unsafe {
        bl_body_free(small);
        bl_body_free(disk);
        bl_params_free(other);
        bl_params_free(pr);
        bl_body_free(ptr::null_mut());
        bl_ring_free(ptr::null_mut());
        bl_string_free(ptr::null_mut());
    }
}

#[test]
fn body_sampling_round_trip() {
    let pr = params(2.0, 64, 16);
    let e = body(r#"{"ellipse":{"a":2,"b":1}}"#, pr);
    let h = values(e);
    assert_eq!(h.len(), 64);
    assert!((h[0] - 2.0).abs() < 1e-14 && (h[16] - 1.0).abs() < 1e-14);
    let b = unsafe { bl_body_mean_width(e) };
    assert!(b > 2.0 && b < 4.0);
    unsafe {
        bl_body_free(e);
        bl_params_free(pr);
    }
}

#[test]
fn ring_exterior_and_interior_on_the_disk() {
    let pr = params(2.0, 64, 32);
    let disk = body(r#"{"disk":{"R":1}}"#, pr);
    let half = body(r#"{"disk":{"R":0.5}}"#, pr);

    let mut ring = ptr::null_mut();
    assert_eq!(unsafe { bl_solve_ring(disk, half, pr, &mut ring) }, BlStatus::Ok);
    let (mut m, mut l) = (0, 0);
    assert_eq!(unsafe { bl_ring_shape(ring, &mut m, &mut l) }, BlStatus::Ok);
    assert_eq!((m, l), (64, 32));
    let mut field = vec![0.0; m * (l + 1)];
    assert_eq!(unsafe { bl_ring_values(ring, field.as_mut_ptr(), field.len()) }, BlStatus::Ok);
    assert!((field[0] - 1.0).abs() < 1e-12 && (field[m * l] - 0.5).abs() < 1e-12);
    // u = ln(1/r)/ln 2 on the annulus, so the middle level is r = 1/√2.
    assert!((field[m * l / 2] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-3);

    let rings = [ring as *const BlRing, ring as *const BlRing];
    let (mut min_value, mut tol) = (0.0, 0.0);
    let st = unsafe { bl_ring_combination_sign([0.4, 0.6].as_ptr(), rings.as_ptr(), 2, &mut min_value, &mut tol) };
    assert_eq!(st, BlStatus::Ok);
    assert!(min_value >= -tol, "min {min_value:e}, band {tol:e}");

    let tau = 1.0 / (2.0 * 2f64.ln());
    let mut omega = ptr::null_mut();
    assert_eq!(unsafe { bl_solve_exterior(disk, tau, pr, 0.0, &mut omega) }, BlStatus::Ok);
    assert!(values(omega).iter().all(|h| (h - 2.0).abs() < 5e-3));

    let mut k = ptr::null_mut();
    let mut feasible = -1;
    assert_eq!(unsafe { bl_solve_interior(disk, 4.0, pr, 0.0, &mut k, &mut feasible) }, BlStatus::Ok);
    assert_eq!(feasible, 1);
    assert!(values(k).iter().all(|h| (h - 0.6996).abs() < 5e-3));

    let mut none = ptr::null_mut();
    assert_eq!(unsafe { bl_solve_interior(disk, 2.0, pr, 0.0, &mut none, &mut feasible) }, BlStatus::Ok);
    assert_eq!(feasible, 0);
    assert!(none.is_null());

    unsafe {
        bl_body_free(k);
        bl_body_free(omega);
        bl_ring_free(ring);
        bl_body_free(half);
        bl_body_free(disk);
        bl_params_free(pr);
    }
}

#[test]
fn lambda_of_the_disk_brackets_e() {
    let pr = params(2.0, 32, 32);
    let disk = body(r#"{"disk":{"R":1}}"#, pr);
    let (mut lambda, mut lo, mut hi) = (0.0, 0.0, 0.0);
    assert_eq!(unsafe { bl_lambda(disk, pr, 0.0, &mut lambda, &mut lo, &mut hi) }, BlStatus::Ok);
    assert!(lo <= lambda && lambda <= hi);
    assert!((lambda / std::f64::consts::E - 1.0).abs() < 0.01, "{lambda}");
    unsafe {
        bl_body_free(disk);
        bl_params_free(pr);
    }
}

#[test]
fn verify_returns_a_report_array() {
    let suite = CString::new("bm").unwrap();
    let cfg = CString::new(
        r#"{"M": 32, "L": 16, "pairs": [{"omega0": {"disk": {"R": 1}}, "omega1": {"disk": {"R": 2}}}], "lambdas": [0.5]}"#,
    )
    .unwrap();
    let mut json = ptr::null_mut();
    let mut pass = -1;
    assert_eq!(unsafe { bl_verify(suite.as_ptr(), cfg.as_ptr(), 1, &mut json, &mut pass) }, BlStatus::Ok);
    assert_eq!(pass, 1);
    let doc: serde_json::Value = serde_json::from_str(unsafe { CStr::from_ptr(json) }.to_str().unwrap()).unwrap();
    assert_eq!(doc[0]["name"], "bm");
    unsafe { bl_string_free(json) };

    let bad = CString::new("nonsense").unwrap();
    assert_eq!(unsafe { bl_verify(bad.as_ptr(), ptr::null(), 1, &mut json, &mut pass) }, BlStatus::InvalidInput);
    assert!(json.is_null());
}

#[test]
fn header_declares_the_entry_points() {
    let header = include_str!("../include/bernoulli_lab.h");
    for name in ["bl_params_new", "bl_solve_exterior", "bl_solve_interior", "bl_verify", "bl_last_error_message", "BL_STATUS_CONVEXITY_LOSS"] {
        assert!(header.contains(name), "{name} missing from header");
    }
}
