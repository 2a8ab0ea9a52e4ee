//! C interface to the hydrosteer solvers.
//!
//! Objects cross the boundary as opaque handles that the caller frees with
//! the matching `*_free` function. Every fallible call returns an
//! [`HsStatus`]; the message of the last failure on the calling thread is
//! available from [`hs_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use hydrosteer::body::Body;
use hydrosteer::config::{ExperimentConfig, ExperimentKind};
use hydrosteer::control::{potential_steering, SteeringOptions, SteeringProblem};
use hydrosteer::experiment::{error_exit_code, run, Outcome, RunOptions, EXIT_CONFIG, EXIT_IO};
use hydrosteer::math::RigidState;
use hydrosteer::rigid::{integrate_potential, ControlSignal, PotentialTrajectory};
use hydrosteer::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HsStatus {
    Ok = 0,
    NullPointer = 1,
    /// A string argument is not valid UTF-8.
    InvalidString = 2,
    /// Configuration or input validation failed.
    Config = 3,
    /// A solver failed: non-contraction, collision, no convergence.
    Numerical = 4,
    Io = 5,
    /// `verify` ran but a residual exceeded its threshold.
    VerificationFailed = 6,
    /// An output buffer is too short; the needed length was written.
    BufferTooSmall = 7,
    /// Internal panic, caught at the boundary.
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HsExperiment {
    Potentials = 0,
    Simulate = 1,
    Steer = 2,
    Verify = 3,
    ScaleStudy = 4,
}

/// An assembled body: mesh, control patches, inertia and matrices.
pub struct HsBody(Body);

/// A potential-flow trajectory.
pub struct HsTrajectory(PotentialTrajectory);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(status: HsStatus, msg: &str) -> HsStatus {
    set_error(msg);
    status
}

fn status_of(e: &Error) -> HsStatus {
    set_error(&e.to_string());
    match error_exit_code(e) {
        EXIT_CONFIG => HsStatus::Config,
        EXIT_IO => HsStatus::Io,
        _ => HsStatus::Numerical,
    }
}

fn guard(f: impl FnOnce() -> HsStatus) -> HsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => {
            if s == HsStatus::Ok {
                set_error("");
            }
            s
        }
        Err(_) => fail(HsStatus::Panic, "internal panic"),
    }
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, HsStatus> {
    if p.is_null() {
        return Err(fail(HsStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(HsStatus::InvalidString, "string argument is not UTF-8"))
}

unsafe fn state_arg(p: *const f64) -> Result<RigidState, HsStatus> {
    if p.is_null() {
        return Err(fail(HsStatus::NullPointer, "null state argument"));
    }
    RigidState::from_array(&*(p as *const [f64; 12])).map_err(|e| status_of(&e))
}

/// Message of the last failed call on this thread, empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn hs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Builds a body from an experiment configuration given as JSON text.
///
/// # Safety
/// `config_json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hs_body_from_config(
    config_json: *const c_char,
    out: *mut *mut HsBody,
) -> HsStatus {
    guard(|| {
        if out.is_null() {
            return fail(HsStatus::NullPointer, "null output handle");
        }
        *out = ptr::null_mut();
        let text = match str_arg(config_json) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match ExperimentConfig::from_json(text).and_then(|c| c.build_body(None)) {
            Ok(body) => {
                *out = Box::into_raw(Box::new(HsBody(body)));
                HsStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// # Safety
/// `body` must come from [`hs_body_from_config`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hs_body_free(body: *mut HsBody) {
    if !body.is_null() {
        drop(Box::from_raw(body));
    }
}

/// Number of control channels of the body; zero for a null handle.
///
/// # Safety
/// `body` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hs_body_controls(body: *const HsBody) -> usize {
    body.as_ref().map_or(0, |b| b.0.mats.controls())
}

/// Writes the 6 x 6 generalized inertia, row-major, into `out`.
///
/// # Safety
/// `body` must be a live handle and `out` must hold 36 doubles.
#[no_mangle]
pub unsafe extern "C" fn hs_body_inertia(body: *const HsBody, out: *mut f64) -> HsStatus {
    guard(|| {
        let Some(b) = body.as_ref() else {
            return fail(HsStatus::NullPointer, "null body");
        };
        if out.is_null() {
            return fail(HsStatus::NullPointer, "null output buffer");
        }
        let out = std::slice::from_raw_parts_mut(out, 36);
        for i in 0..6 {
            for j in 0..6 {
                out[6 * i + j] = b.0.mats.jcal[(i, j)];
            }
        }
        HsStatus::Ok
    })
}

/// Integrates the potential-flow model from `state0` (12 doubles: h, q, l, r)
/// under the spline control with `intervals` knot intervals on `[0, horizon]`.
///
/// # Safety
/// `body` must be a live handle, `state0` must hold 12 doubles, `coefficients`
/// must hold `len` doubles and `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hs_integrate_potential(
    body: *const HsBody,
    state0: *const f64,
    coefficients: *const f64,
    len: usize,
    intervals: usize,
    horizon: f64,
    dt: f64,
    out: *mut *mut HsTrajectory,
) -> HsStatus {
    guard(|| {
        let Some(b) = body.as_ref() else {
            return fail(HsStatus::NullPointer, "null body");
        };
        if out.is_null() || (coefficients.is_null() && len > 0) {
            return fail(HsStatus::NullPointer, "null argument");
        }
        *out = ptr::null_mut();
        let state0 = match state_arg(state0) {
            Ok(s) => s,
            Err(s) => return s,
        };
        let coefs = if len == 0 {
            Vec::new()
        } else {
            std::slice::from_raw_parts(coefficients, len).to_vec()
        };
        let channels = b.0.mats.controls();
        let result = ControlSignal::new(channels, intervals, horizon, coefs)
            .and_then(|c| integrate_potential(&state0, &c, horizon, dt, &b.0.mats));
        match result {
            Ok(traj) => {
                *out = Box::into_raw(Box::new(HsTrajectory(traj)));
                HsStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// # Safety
/// `traj` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hs_trajectory_samples(traj: *const HsTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.0.times.len())
}

/// Writes sample `k` as 13 doubles: t, h, q, l, r.
///
/// # Safety
/// `traj` must be a live handle and `out` must hold 13 doubles.
#[no_mangle]
pub unsafe extern "C" fn hs_trajectory_sample(
    traj: *const HsTrajectory,
    k: usize,
    out: *mut f64,
) -> HsStatus {
    guard(|| {
        let Some(t) = traj.as_ref() else {
            return fail(HsStatus::NullPointer, "null trajectory");
        };
        if out.is_null() {
            return fail(HsStatus::NullPointer, "null output buffer");
        }
        if k >= t.0.times.len() {
            return fail(HsStatus::Config, &format!("sample {k} out of range"));
        }
        let out = std::slice::from_raw_parts_mut(out, 13);
        out[0] = t.0.times[k];
        out[1..].copy_from_slice(&t.0.states[k].to_array());
        HsStatus::Ok
    })
}

/// # Safety
/// `traj` must come from [`hs_integrate_potential`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hs_trajectory_free(traj: *mut HsTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Steers the potential model from `initial` to `target` (12 doubles each).
/// On success the control coefficients go to `out` and their count to
/// `len`; when `capacity` is too small only `len` is written.
///
/// # Safety
/// `body` must be a live handle, the states must hold 12 doubles, `out` must
/// hold `capacity` doubles, and `len` and `residual` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn hs_potential_steering(
    body: *const HsBody,
    initial: *const f64,
    target: *const f64,
    horizon: f64,
    intervals: usize,
    out: *mut f64,
    capacity: usize,
    len: *mut usize,
    residual: *mut f64,
) -> HsStatus {
    guard(|| {
        let Some(b) = body.as_ref() else {
            return fail(HsStatus::NullPointer, "null body");
        };
        if len.is_null() || residual.is_null() || (out.is_null() && capacity > 0) {
            return fail(HsStatus::NullPointer, "null output argument");
        }
        let (initial, target) = match (state_arg(initial), state_arg(target)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        let result = SteeringProblem::new(initial, target, horizon, intervals)
            .and_then(|p| potential_steering(&p, &b.0.mats, &SteeringOptions::default()));
        match result {
            Ok(r) => {
                let coefs = r.control.coefficients();
                *len = coefs.len();
                *residual = r.residual;
                if coefs.len() > capacity {
                    return fail(HsStatus::BufferTooSmall, "coefficient buffer too small");
                }
                std::slice::from_raw_parts_mut(out, coefs.len()).copy_from_slice(coefs);
                HsStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Runs one experiment as the command-line tool would. `cache_dir` may be
/// null.
///
/// # Safety
/// `config_path` and `out_dir` must be NUL-terminated strings; `cache_dir`
/// must be null or NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn hs_run_experiment(
    kind: HsExperiment,
    config_path: *const c_char,
    out_dir: *const c_char,
    cache_dir: *const c_char,
) -> HsStatus {
    guard(|| {
        let (config_path, out_dir) = match (str_arg(config_path), str_arg(out_dir)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        let cache = if cache_dir.is_null() {
            None
        } else {
            match str_arg(cache_dir) {
                Ok(c) => Some(PathBuf::from(c)),
                Err(s) => return s,
            }
        };
        let kind = match kind {
            HsExperiment::Potentials => ExperimentKind::Potentials,
            HsExperiment::Simulate => ExperimentKind::Simulate,
            HsExperiment::Steer => ExperimentKind::Steer,
            HsExperiment::Verify => ExperimentKind::Verify,
            HsExperiment::ScaleStudy => ExperimentKind::ScaleStudy,
        };
        let opts = RunOptions {
            out: PathBuf::from(out_dir),
            cache,
        };
        match ExperimentConfig::load(config_path.as_ref()).and_then(|c| run(kind, &c, &opts)) {
            Ok(Outcome::Success) => HsStatus::Ok,
            Ok(Outcome::VerificationFailed(names)) => fail(
                HsStatus::VerificationFailed,
                &format!("residuals above threshold: {}", names.join(", ")),
            ),
            Err(e) => status_of(&e),
        }
    })
}
