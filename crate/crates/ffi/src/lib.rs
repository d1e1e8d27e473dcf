//! C ABI over the robust-ik library: opaque chain handles, status codes,
//! thread-local error messages. The authoritative surface description is
//! `include/robust_ik.h`; a test keeps the header and the exported symbols
//! in sync.
//!
//! Every entry point catches panics at the boundary, so misuse degrades to
//! `RIK_INTERNAL_ERROR` instead of undefined behavior.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, c_ulonglong, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use robust_ik::ik_engine::IkRequest;
use robust_ik::kinematics::{fk_pose, Pose};
use robust_ik::numerics::{Mat, UnitQuaternion};
use robust_ik::robot_model::{load_chain, JointVector, KinematicChain};
use robust_ik::robust_select::{robust_ik, score_solution, TaskMetric};
use robust_ik::uncertainty::JointErrorModel;

pub const RIK_OK: c_int = 0;
pub const RIK_INVALID_ARGUMENT: c_int = 1;
pub const RIK_PARSE_ERROR: c_int = 2;
pub const RIK_UNREACHABLE: c_int = 3;
pub const RIK_NO_ROBUST_SOLUTION: c_int = 4;
pub const RIK_INTERNAL_ERROR: c_int = 5;

pub const RIK_METRIC_FULL: c_int = 0;
pub const RIK_METRIC_DIRECTION: c_int = 1;
pub const RIK_METRIC_PLANE: c_int = 2;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: impl AsRef<str>) {
    let sanitized: String = message.as_ref().replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn fail(code: c_int, message: impl AsRef<str>) -> c_int {
    set_error(message);
    code
}

/// Message describing the most recent failure on this thread. Valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn rik_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Wraps a body so panics become RIK_INTERNAL_ERROR instead of unwinding
/// across the ABI.
fn guarded(body: impl FnOnce() -> c_int) -> c_int {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(code) => code,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic in robust-ik".to_string());
            fail(RIK_INTERNAL_ERROR, msg)
        }
    }
}

unsafe fn chain_ref<'a>(chain: *const KinematicChain) -> Option<&'a KinematicChain> {
    chain.as_ref()
}

/// # Safety
/// `toml_text` must be a valid NUL-terminated string and `out_chain` a
/// valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rik_chain_from_str(
    toml_text: *const c_char,
    out_chain: *mut *mut KinematicChain,
) -> c_int {
    guarded(|| {
        if toml_text.is_null() || out_chain.is_null() {
            return fail(RIK_INVALID_ARGUMENT, "null pointer");
        }
        let text = match CStr::from_ptr(toml_text).to_str() {
            Ok(t) => t,
            Err(_) => return fail(RIK_INVALID_ARGUMENT, "robot spec is not valid UTF-8"),
        };
        match load_chain(text) {
            Ok(chain) => {
                *out_chain = Box::into_raw(Box::new(chain));
                RIK_OK
            }
            Err(e) => fail(RIK_PARSE_ERROR, e.to_string()),
        }
    })
}

/// # Safety
/// `path` must be a valid NUL-terminated string and `out_chain` a valid
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn rik_chain_from_file(
    path: *const c_char,
    out_chain: *mut *mut KinematicChain,
) -> c_int {
    guarded(|| {
        if path.is_null() || out_chain.is_null() {
            return fail(RIK_INVALID_ARGUMENT, "null pointer");
        }
        let path = match CStr::from_ptr(path).to_str() {
            Ok(p) => p,
            Err(_) => return fail(RIK_INVALID_ARGUMENT, "path is not valid UTF-8"),
        };
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => return fail(RIK_PARSE_ERROR, format!("{path}: {e}")),
        };
        match load_chain(&text) {
            Ok(chain) => {
                *out_chain = Box::into_raw(Box::new(chain));
                RIK_OK
            }
            Err(e) => fail(RIK_PARSE_ERROR, format!("{path}: {e}")),
        }
    })
}

/// # Safety
/// `chain` must come from rik_chain_from_str/file and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn rik_chain_free(chain: *mut KinematicChain) {
    if !chain.is_null() {
        drop(Box::from_raw(chain));
    }
}

/// # Safety
/// `chain` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn rik_chain_dof(chain: *const KinematicChain) -> usize {
    chain_ref(chain).map_or(0, |c| c.dof())
}

unsafe fn read_theta(
    chain: &KinematicChain,
    theta: *const f64,
    n: usize,
) -> Result<JointVector, String> {
    if theta.is_null() {
        return Err("theta is null".to_string());
    }
    if n != chain.dof() {
        return Err(format!("theta has length {n}, chain has {} joints", chain.dof()));
    }
    Ok(JointVector(std::slice::from_raw_parts(theta, n).to_vec()))
}

unsafe fn read_quat(q: *const f64) -> Result<UnitQuaternion, String> {
    if q.is_null() {
        return Err("quaternion is null".to_string());
    }
    let q = std::slice::from_raw_parts(q, 4);
    UnitQuaternion::new_normalize(q[0], [q[1], q[2], q[3]]).map_err(|e| e.to_string())
}

unsafe fn read_metric(
    mode: c_int,
    aux: *const f64,
    lambda: f64,
    epsilon: f64,
) -> Result<TaskMetric, String> {
    match mode {
        RIK_METRIC_FULL => TaskMetric::full_r3(lambda, epsilon).map_err(|e| e.to_string()),
        RIK_METRIC_DIRECTION => {
            if aux.is_null() {
                return Err("direction metric requires aux = double[3]".to_string());
            }
            let v = std::slice::from_raw_parts(aux, 3);
            TaskMetric::direction([v[0], v[1], v[2]], lambda, epsilon).map_err(|e| e.to_string())
        }
        RIK_METRIC_PLANE => {
            if aux.is_null() {
                return Err("plane metric requires aux = double[6]".to_string());
            }
            let v = std::slice::from_raw_parts(aux, 6);
            let basis = Mat::from_fn(3, 2, |r, c| v[c * 3 + r]);
            TaskMetric::plane(basis, lambda, epsilon).map_err(|e| e.to_string())
        }
        other => Err(format!("unknown metric mode {other}")),
    }
}

/// # Safety
/// Pointers must satisfy the shapes documented in robust_ik.h.
#[no_mangle]
pub unsafe extern "C" fn rik_fk(
    chain: *const KinematicChain,
    theta: *const f64,
    n: usize,
    out_position: *mut f64,
    out_quaternion: *mut f64,
) -> c_int {
    guarded(|| {
        let Some(chain) = chain_ref(chain) else {
            return fail(RIK_INVALID_ARGUMENT, "chain is null");
        };
        if out_position.is_null() || out_quaternion.is_null() {
            return fail(RIK_INVALID_ARGUMENT, "output pointer is null");
        }
        let theta = match read_theta(chain, theta, n) {
            Ok(t) => t,
            Err(e) => return fail(RIK_INVALID_ARGUMENT, e),
        };
        match fk_pose(chain, &theta) {
            Ok(pose) => {
                let p = std::slice::from_raw_parts_mut(out_position, 3);
                p.copy_from_slice(&pose.position);
                let q = std::slice::from_raw_parts_mut(out_quaternion, 4);
                q.copy_from_slice(&pose.orientation.as_array());
                RIK_OK
            }
            Err(e) => fail(RIK_INVALID_ARGUMENT, e.to_string()),
        }
    })
}

/// # Safety
/// Pointers must satisfy the shapes documented in robust_ik.h.
#[no_mangle]
pub unsafe extern "C" fn rik_score(
    chain: *const KinematicChain,
    theta: *const f64,
    n: usize,
    target_quat: *const f64,
    sigma: f64,
    k: f64,
    mode: c_int,
    aux: *const f64,
    lambda: f64,
    out_bounds: *mut f64,
) -> c_int {
    guarded(|| {
        let Some(chain) = chain_ref(chain) else {
            return fail(RIK_INVALID_ARGUMENT, "chain is null");
        };
        if out_bounds.is_null() {
            return fail(RIK_INVALID_ARGUMENT, "out_bounds is null");
        }
        let theta = match read_theta(chain, theta, n) {
            Ok(t) => t,
            Err(e) => return fail(RIK_INVALID_ARGUMENT, e),
        };
        let qd = match read_quat(target_quat) {
            Ok(q) => q,
            Err(e) => return fail(RIK_INVALID_ARGUMENT, e),
        };
        let model = match JointErrorModel::new(sigma, k) {
            Ok(m) => m,
            Err(e) => return fail(RIK_INVALID_ARGUMENT, e.to_string()),
        };
        // Epsilon is irrelevant for scoring; use infinity.
        let metric = match read_metric(mode, aux, lambda, f64::INFINITY) {
            Ok(m) => m,
            Err(e) => return fail(RIK_INVALID_ARGUMENT, e),
        };
        match score_solution(chain, &theta, &qd, &model, &metric) {
            Ok(score) => {
                let out = std::slice::from_raw_parts_mut(out_bounds, 3);
                out[0] = score.position;
                out[1] = score.rotation;
                out[2] = score.combined;
                RIK_OK
            }
            Err(e) => fail(RIK_INVALID_ARGUMENT, e.to_string()),
        }
    })
}

/// # Safety
/// Pointers must satisfy the shapes documented in robust_ik.h; `out_theta`
/// must have capacity for `rik_chain_dof(chain)` values.
#[no_mangle]
pub unsafe extern "C" fn rik_robust_ik(
    chain: *const KinematicChain,
    target_pos: *const f64,
    target_quat: *const f64,
    sigma: f64,
    k: f64,
    mode: c_int,
    aux: *const f64,
    lambda: f64,
    epsilon: f64,
    ik_count: usize,
    seed: c_ulonglong,
    position_only: c_int,
    out_theta: *mut f64,
    out_combined_bound: *mut f64,
) -> c_int {
    guarded(|| {
        let Some(chain) = chain_ref(chain) else {
            return fail(RIK_INVALID_ARGUMENT, "chain is null");
        };
        if target_pos.is_null() || out_theta.is_null() || out_combined_bound.is_null() {
            return fail(RIK_INVALID_ARGUMENT, "null pointer");
        }
        if ik_count == 0 {
            return fail(RIK_INVALID_ARGUMENT, "ik_count must be at least 1");
        }
        let p = std::slice::from_raw_parts(target_pos, 3);
        let orientation = match read_quat(target_quat) {
            Ok(q) => q,
            Err(e) => return fail(RIK_INVALID_ARGUMENT, e),
        };
        let target = Pose { position: [p[0], p[1], p[2]], orientation };
        let model = match JointErrorModel::new(sigma, k) {
            Ok(m) => m,
            Err(e) => return fail(RIK_INVALID_ARGUMENT, e.to_string()),
        };
        let metric = match read_metric(mode, aux, lambda, epsilon) {
            Ok(m) => m,
            Err(e) => return fail(RIK_INVALID_ARGUMENT, e),
        };
        let mut req = if position_only != 0 {
            IkRequest::position_only(chain, target)
        } else {
            IkRequest::new(chain, target)
        };
        req.count = ik_count;
        req.seed = seed;

        match robust_ik(&req, &model, &metric) {
            Ok(outcome) => {
                let best = outcome.report.best();
                let out = std::slice::from_raw_parts_mut(out_theta, chain.dof());
                out.copy_from_slice(best.theta.as_slice());
                *out_combined_bound = best.combined;
                if outcome.best.is_some() {
                    RIK_OK
                } else {
                    fail(
                        RIK_NO_ROBUST_SOLUTION,
                        format!(
                            "minimum combined bound {:.6e} exceeds epsilon {epsilon:.6e}",
                            best.combined
                        ),
                    )
                }
            }
            Err(e) => fail(RIK_UNREACHABLE, e.to_string()),
        }
    })
}
