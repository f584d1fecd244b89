//! C ABI for `bernoulli_lab`.
//!
//! Objects cross the boundary as opaque handles created by `bl_*_new` or a
//! solver call and released with the matching `bl_*_free`. Fallible calls
//! return a [`BlStatus`]; on failure the message is kept per thread and can be
//! read with [`bl_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use bernoulli_lab::geometry::{sample_support, BodySpec, SupportFunction};
use bernoulli_lab::harness::{run_suite, Suite, SuiteConfig};
use bernoulli_lab::interior::{bernoulli_constant, lambda_ball, solve_interior, InteriorOutcome, LambdaOptions};
use bernoulli_lab::minkowski::{combination_sign, combine_solutions};
use bernoulli_lab::ring::{solve_ring, PLaplaceParams, RingSolution};
use bernoulli_lab::{exterior, io, Error};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlStatus {
    Ok = 0,
    /// A required pointer was null, a buffer too short, or a string not UTF-8.
    InvalidArgument = 1,
    InvalidInput = 2,
    DegenerateBody = 3,
    GridMismatch = 4,
    NewtonDivergence = 5,
    ConvexityLoss = 6,
    GridTooCoarse = 7,
    TrialDivergence = 8,
    BracketInversion = 9,
    InfeasibleTau = 10,
    /// Any other library error (linear solve, I/O, optimization).
    SolverFailure = 11,
    /// A panic was caught at the boundary.
    Internal = 12,
}

impl From<&Error> for BlStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidInput(_) | Error::Json(_) => BlStatus::InvalidInput,
            Error::DegenerateBody(_) => BlStatus::DegenerateBody,
            Error::GridMismatch { .. } => BlStatus::GridMismatch,
            Error::NewtonDivergence { .. } => BlStatus::NewtonDivergence,
            Error::ConvexityLoss { .. } => BlStatus::ConvexityLoss,
            Error::GridTooCoarse(_) => BlStatus::GridTooCoarse,
            Error::TrialDivergence { .. } => BlStatus::TrialDivergence,
            Error::BracketInversion(_) => BlStatus::BracketInversion,
            Error::InfeasibleTau { .. } => BlStatus::InfeasibleTau,
            _ => BlStatus::SolverFailure,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct ArgError(String);

enum Fail {
    Arg(ArgError),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

impl From<ArgError> for Fail {
    fn from(e: ArgError) -> Self {
        Fail::Arg(e)
    }
}

/// Runs `f`, converting errors and panics into a status and a stored message.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> BlStatus {
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BlStatus::Ok,
        Ok(Err(Fail::Arg(ArgError(msg)))) => {
            set_last_error(msg);
            BlStatus::InvalidArgument
        }
        Ok(Err(Fail::Lib(e))) => {
            set_last_error(format!("{}: {e}", e.kind()));
            BlStatus::from(&e)
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| (*s).to_owned()))
                .unwrap_or_else(|| "unknown panic".to_owned());
            set_last_error(format!("internal error: {msg}"));
            BlStatus::Internal
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, ArgError> {
    if p.is_null() {
        return Err(ArgError(format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| ArgError(format!("{what} is not valid UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, ArgError> {
    p.as_ref().ok_or_else(|| ArgError(format!("{what} is null")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, ArgError> {
    p.as_mut().ok_or_else(|| ArgError(format!("{what} is null")))
}

/// Grid and solver settings shared by all solves.
pub struct BlParams(PLaplaceParams);

/// A body sampled on the direction grid of some [`BlParams`].
pub struct BlBody(SupportFunction);

/// A converged ring solution.
pub struct BlRing(RingSolution);

/// Message of the last failed call on this thread, or null if the last call
/// succeeded. The pointer stays valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn bl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn bl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Closed-form Bernoulli constant of the ball of radius `radius` in R^`n`.
/// Returns NaN unless `radius > 0`, `p > 1` and `n ≥ 2`.
#[no_mangle]
pub extern "C" fn bl_lambda_ball(radius: f64, p: f64, n: u32) -> f64 {
    if radius > 0.0 && p > 1.0 && n >= 2 {
        lambda_ball(radius, p, n)
    } else {
        f64::NAN
    }
}

/// Creates solver settings for exponent `p` on `directions × levels` nodes.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn bl_params_new(p: f64, directions: usize, levels: usize, out: *mut *mut BlParams) -> BlStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let params = PLaplaceParams::new(p, directions, levels)?;
        *out = Box::into_raw(Box::new(BlParams(params)));
        Ok(())
    })
}

/// Sets the Newton residual tolerance.
///
/// # Safety
/// `params` must be a live handle from [`bl_params_new`].
#[no_mangle]
pub unsafe extern "C" fn bl_params_set_newton_tol(params: *mut BlParams, tol: f64) -> BlStatus {
    guard(|| {
        let params = out_arg(params, "params")?;
        let mut next = params.0;
        next.newton_tol = tol;
        next.validate()?;
        params.0 = next;
        Ok(())
    })
}

/// # Safety
/// `params` must be null or a handle from [`bl_params_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bl_params_free(params: *mut BlParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// Samples the body described by the JSON document `json` (for example
/// `{"ellipse":{"a":2,"b":1}}`) on the direction grid of `params`.
///
/// # Safety
/// `json` must be a NUL-terminated string, `params` a live handle and `out`
/// valid storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn bl_body_from_json(json: *const c_char, params: *const BlParams, out: *mut *mut BlBody) -> BlStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let text = str_arg(json, "json")?;
        let params = ref_arg(params, "params")?;
        let spec = BodySpec::from_json(text)?;
        *out = Box::into_raw(Box::new(BlBody(sample_support(&spec, params.0.grid)?)));
        Ok(())
    })
}

/// Number of directions of the body's grid (0 for a null handle).
///
/// # Safety
/// `body` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bl_body_len(body: *const BlBody) -> usize {
    body.as_ref().map_or(0, |b| b.0.len())
}

/// Copies the support values `h(θ_j)`, `θ_j = 2πj/M`, into `out[0..len]`;
/// `len` must be at least [`bl_body_len`].
///
/// # Safety
/// `body` must be a live handle and `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn bl_body_values(body: *const BlBody, out: *mut f64, len: usize) -> BlStatus {
    guard(|| {
        let body = ref_arg(body, "body")?;
        let values = body.0.values();
        if out.is_null() || len < values.len() {
            return Err(ArgError(format!("output buffer needs {} doubles", values.len())).into());
        }
        ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
        Ok(())
    })
}

/// Mean width `b = (1/π) ∮ h dθ` of the body.
///
/// # Safety
/// `body` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn bl_body_mean_width(body: *const BlBody) -> f64 {
    body.as_ref().map_or(f64::NAN, |b| bernoulli_lab::geometry::mean_width(&b.0))
}

/// # Safety
/// `body` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bl_body_free(body: *mut BlBody) {
    if !body.is_null() {
        drop(Box::from_raw(body));
    }
}

/// Bernoulli constant of `omega`: writes the estimate and its bracket.
/// `bisect_tol ≤ 0` selects the default relative bracket width.
///
/// # Safety
/// Handles must be live; `lambda`, `lo`, `hi` must be writable (`lo` and `hi`
/// may be null).
#[no_mangle]
pub unsafe extern "C" fn bl_lambda(
    omega: *const BlBody,
    params: *const BlParams,
    bisect_tol: f64,
    lambda: *mut f64,
    lo: *mut f64,
    hi: *mut f64,
) -> BlStatus {
    guard(|| {
        let omega = ref_arg(omega, "omega")?;
        let params = ref_arg(params, "params")?;
        let out = out_arg(lambda, "lambda")?;
        let mut opts = LambdaOptions::default();
        if bisect_tol > 0.0 {
            opts.bisect_tol = bisect_tol;
        }
        let res = bernoulli_constant(&omega.0, &params.0, &opts)?;
        *out = res.lambda;
        if let Some(lo) = lo.as_mut() {
            *lo = res.bracket.0;
        }
        if let Some(hi) = hi.as_mut() {
            *hi = res.bracket.1;
        }
        Ok(())
    })
}

/// Exterior problem: the domain `Ω ⊃ K` with `|Du| = tau` on `∂Ω`.
/// `fp_tol ≤ 0` selects the default.
///
/// # Safety
/// Handles must be live and `omega_out` valid storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn bl_solve_exterior(
    k: *const BlBody,
    tau: f64,
    params: *const BlParams,
    fp_tol: f64,
    omega_out: *mut *mut BlBody,
) -> BlStatus {
    guard(|| {
        let out = out_arg(omega_out, "omega_out")?;
        *out = ptr::null_mut();
        let k = ref_arg(k, "k")?;
        let params = ref_arg(params, "params")?;
        let mut opts = exterior::ExteriorOptions::default();
        if fp_tol > 0.0 {
            opts.fp_tol = fp_tol;
        }
        let sol = exterior::solve_exterior_with(&k.0, tau, &params.0, &opts)?;
        *out = Box::into_raw(Box::new(BlBody(sol.h_omega)));
        Ok(())
    })
}

/// Interior problem: the largest `K ⊂ Ω` with `|Du| = tau` on `∂K`.
/// On success `*feasible` is 1 and `*k_out` holds `K`; when the trial
/// iteration degenerates (`tau` below the Bernoulli constant) `*feasible`
/// is 0, `*k_out` is null and the status is still `Ok`.
///
/// # Safety
/// Handles must be live; `k_out` and `feasible` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bl_solve_interior(
    omega: *const BlBody,
    tau: f64,
    params: *const BlParams,
    fp_tol: f64,
    k_out: *mut *mut BlBody,
    feasible: *mut i32,
) -> BlStatus {
    guard(|| {
        let out = out_arg(k_out, "k_out")?;
        *out = ptr::null_mut();
        let feasible = out_arg(feasible, "feasible")?;
        let omega = ref_arg(omega, "omega")?;
        let params = ref_arg(params, "params")?;
        let tol = if fp_tol > 0.0 { fp_tol } else { bernoulli_lab::interior::InteriorOptions::default().fp_tol };
        match solve_interior(&omega.0, tau, &params.0, tol)? {
            InteriorOutcome::Solved(sol) => {
                *feasible = 1;
                *out = Box::into_raw(Box::new(BlBody(sol.h_k)));
            }
            InteriorOutcome::Infeasible(_) => *feasible = 0,
        }
        Ok(())
    })
}

/// Capacitary potential of the ring `outer ∖ inner`.
///
/// # Safety
/// Handles must be live and `out` valid storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn bl_solve_ring(
    outer: *const BlBody,
    inner: *const BlBody,
    params: *const BlParams,
    out: *mut *mut BlRing,
) -> BlStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let sol = solve_ring(&ref_arg(outer, "outer")?.0, &ref_arg(inner, "inner")?.0, &ref_arg(params, "params")?.0)?;
        *out = Box::into_raw(Box::new(BlRing(sol)));
        Ok(())
    })
}

/// Writes the number of directions `M` and of level intervals `L`.
///
/// # Safety
/// `ring` must be live; `m` and `l` writable.
#[no_mangle]
pub unsafe extern "C" fn bl_ring_shape(ring: *const BlRing, m: *mut usize, l: *mut usize) -> BlStatus {
    guard(|| {
        let ring = ref_arg(ring, "ring")?;
        *out_arg(m, "m")? = ring.0.field.grid().len();
        *out_arg(l, "l")? = ring.0.field.levels();
        Ok(())
    })
}

/// Copies the ring field, stored level by level: `out[k*M + j]` is the
/// support value of the level `t_k = k/L` in direction `θ_j`.
///
/// # Safety
/// `ring` must be live and `out` must point to `len ≥ M (L + 1)` doubles.
#[no_mangle]
pub unsafe extern "C" fn bl_ring_values(ring: *const BlRing, out: *mut f64, len: usize) -> BlStatus {
    guard(|| {
        let values = ref_arg(ring, "ring")?.0.field.values();
        if out.is_null() || len < values.len() {
            return Err(ArgError(format!("output buffer needs {} doubles", values.len())).into());
        }
        ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
        Ok(())
    })
}

/// Levelwise Minkowski combination of `n` rings with `weights`; writes the
/// smallest interior value of the p-Laplacian sign residual and the band
/// below which it counts as zero (a nonnegative value, up to the band,
/// certifies a subsolution).
///
/// # Safety
/// `weights` and `rings` must point to `n` entries, each ring a live handle.
#[no_mangle]
pub unsafe extern "C" fn bl_ring_combination_sign(
    weights: *const f64,
    rings: *const *const BlRing,
    n: usize,
    min_value: *mut f64,
    sign_tol: *mut f64,
) -> BlStatus {
    guard(|| {
        if weights.is_null() || rings.is_null() || n == 0 {
            return Err(ArgError("weights and rings must hold n > 0 entries".into()).into());
        }
        let w = std::slice::from_raw_parts(weights, n);
        let mut sols = Vec::with_capacity(n);
        for &r in std::slice::from_raw_parts(rings, n) {
            sols.push(&ref_arg(r, "ring")?.0);
        }
        combine_solutions(w, &sols)?;
        let signs = combination_sign(w, &sols)?;
        *out_arg(min_value, "min_value")? = signs.min_value();
        *out_arg(sign_tol, "sign_tol")? = signs.sign_tol;
        Ok(())
    })
}

/// # Safety
/// `ring` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bl_ring_free(ring: *mut BlRing) {
    if !ring.is_null() {
        drop(Box::from_raw(ring));
    }
}

/// Runs the named verification suite with the JSON configuration `config`
/// (null for the built-in one). Writes the JSON report array to
/// `*reports_json` (release with [`bl_string_free`]) and whether every check
/// passed to `*all_pass`.
///
/// # Safety
/// `suite` must be a NUL-terminated string, `config` null or one, and the
/// output pointers writable.
#[no_mangle]
pub unsafe extern "C" fn bl_verify(
    suite: *const c_char,
    config: *const c_char,
    jobs: usize,
    reports_json: *mut *mut c_char,
    all_pass: *mut i32,
) -> BlStatus {
    guard(|| {
        let out = out_arg(reports_json, "reports_json")?;
        *out = ptr::null_mut();
        let pass = out_arg(all_pass, "all_pass")?;
        let suite: Suite = str_arg(suite, "suite")?.parse()?;
        let cfg: SuiteConfig = if config.is_null() {
            SuiteConfig::default()
        } else {
            serde_json::from_str(str_arg(config, "config")?).map_err(Error::from)?
        };
        let reports = run_suite(suite, &cfg, jobs.max(1))?;
        *pass = i32::from(reports.iter().all(|r| r.pass));
        let text = io::to_json(&serde_json::to_value(&reports).map_err(Error::from)?);
        *out = CString::new(text).map_err(|_| ArgError("report contains NUL".into()))?.into_raw();
        Ok(())
    })
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be null or a string returned by [`bl_verify`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
