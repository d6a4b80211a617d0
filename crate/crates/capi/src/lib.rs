//! C ABI for the consensus simulator.
//!
//! Conventions:
//! - every function returns an [`AcsimStatus`]; out-parameters are written
//!   only on `ACSIM_STATUS_OK`
//! - handles (`AcsimTopology`, `AcsimTrajectory`) are opaque and must be
//!   released with the matching `_free` function
//! - strings returned through `char **` are UTF-8, NUL-terminated, and must
//!   be released with `acsim_string_free`
//! - on failure a thread-local message is available via
//!   `acsim_last_error_message` until the next failing call on that thread
//!
//! The matching header lives in `include/acsim.h`; rebuild it with
//! `cargo build -p acsim-capi --features generate-header`.

use acsim::analysis::{analyze, discrepancy_report};
use acsim::sim::{monte_carlo, run_async, run_sync, DelayKind, DelayModel, Trajectory};
use acsim::stochastic::RowStochasticMatrix;
use acsim::topology::{row_normalize, DirectedTopology};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

/// Status codes returned by every API function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AcsimStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidTopology = 2,
    InvalidArgument = 3,
    NumericFailure = 4,
    Io = 5,
    Utf8 = 6,
    Panic = 7,
}

/// Delay model selector for the asynchronous entry points.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AcsimDelayKind {
    None = 0,
    Uniform = 1,
    Fixed = 2,
    Shared = 3,
}

impl From<AcsimDelayKind> for DelayKind {
    fn from(k: AcsimDelayKind) -> Self {
        match k {
            AcsimDelayKind::None => DelayKind::None,
            AcsimDelayKind::Uniform => DelayKind::Uniform,
            AcsimDelayKind::Fixed => DelayKind::Fixed,
            AcsimDelayKind::Shared => DelayKind::Shared,
        }
    }
}

/// Opaque handle: a validated topology plus its row-normalized matrix.
pub struct AcsimTopology {
    topology: DirectedTopology,
    f: RowStochasticMatrix,
}

/// Opaque handle: a completed simulation trajectory.
pub struct AcsimTrajectory {
    inner: Trajectory,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let c = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

/// Message for the most recent failure on this thread, or NULL. The pointer
/// is valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn acsim_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

fn guard<F: FnOnce() -> AcsimStatus>(f: F) -> AcsimStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            AcsimStatus::Panic
        }
    }
}

/// # Safety
/// `text` must be a valid NUL-terminated string; `out` must be a valid
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn acsim_topology_parse(
    text: *const c_char,
    out: *mut *mut AcsimTopology,
) -> AcsimStatus {
    guard(|| {
        if text.is_null() || out.is_null() {
            set_error("null pointer argument");
            return AcsimStatus::NullPointer;
        }
        let text = match unsafe { CStr::from_ptr(text) }.to_str() {
            Ok(t) => t,
            Err(_) => {
                set_error("topology text is not valid UTF-8");
                return AcsimStatus::Utf8;
            }
        };
        match DirectedTopology::parse(text) {
            Ok(topology) => {
                let f = row_normalize(&topology);
                unsafe { *out = Box::into_raw(Box::new(AcsimTopology { topology, f })) };
                AcsimStatus::Ok
            }
            Err(e) => {
                set_error(e.to_string());
                AcsimStatus::InvalidTopology
            }
        }
    })
}

/// # Safety
/// `path` must be a valid NUL-terminated string; `out` must be a valid
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn acsim_topology_load(
    path: *const c_char,
    out: *mut *mut AcsimTopology,
) -> AcsimStatus {
    guard(|| {
        if path.is_null() || out.is_null() {
            set_error("null pointer argument");
            return AcsimStatus::NullPointer;
        }
        let path = match unsafe { CStr::from_ptr(path) }.to_str() {
            Ok(p) => p,
            Err(_) => {
                set_error("path is not valid UTF-8");
                return AcsimStatus::Utf8;
            }
        };
        match DirectedTopology::load(Path::new(path)) {
            Ok(topology) => {
                let f = row_normalize(&topology);
                unsafe { *out = Box::into_raw(Box::new(AcsimTopology { topology, f })) };
                AcsimStatus::Ok
            }
            Err(e) => {
                set_error(e.to_string());
                match e {
                    acsim::topology::TopologyError::Io { .. } => AcsimStatus::Io,
                    _ => AcsimStatus::InvalidTopology,
                }
            }
        }
    })
}

/// # Safety
/// `handle` must be NULL or a pointer from a topology constructor, not yet
/// freed.
#[no_mangle]
pub unsafe extern "C" fn acsim_topology_free(handle: *mut AcsimTopology) {
    if !handle.is_null() {
        drop(unsafe { Box::from_raw(handle) });
    }
}

/// # Safety
/// `handle` must be a live topology handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn acsim_topology_agent_count(
    handle: *const AcsimTopology,
    out: *mut usize,
) -> AcsimStatus {
    guard(|| {
        if handle.is_null() || out.is_null() {
            set_error("null pointer argument");
            return AcsimStatus::NullPointer;
        }
        unsafe { *out = (*handle).topology.n() };
        AcsimStatus::Ok
    })
}

unsafe fn slice_arg<'a>(
    ptr_: *const f64,
    len: usize,
    expected: usize,
    name: &str,
) -> Result<Option<&'a [f64]>, AcsimStatus> {
    if ptr_.is_null() {
        if len == 0 {
            return Ok(None);
        }
        set_error(format!("{name} is NULL but length is {len}"));
        return Err(AcsimStatus::NullPointer);
    }
    if len != expected {
        set_error(format!("{name} has {len} entries, topology has {expected}"));
        return Err(AcsimStatus::InvalidArgument);
    }
    Ok(Some(unsafe { std::slice::from_raw_parts(ptr_, len) }))
}

fn return_string(out: *mut *mut c_char, text: String) -> AcsimStatus {
    match CString::new(text) {
        Ok(c) => {
            unsafe { *out = c.into_raw() };
            AcsimStatus::Ok
        }
        Err(_) => {
            set_error("result contained an interior NUL");
            AcsimStatus::Utf8
        }
    }
}

/// Structural and spectral analysis serialized as JSON. `x0` may be NULL
/// (with `x0_len` 0) to skip value prediction.
///
/// # Safety
/// `handle` must be a live topology handle; `x0` must point to `x0_len`
/// doubles or be NULL; `out_json` must be valid.
#[no_mangle]
pub unsafe extern "C" fn acsim_analyze_json(
    handle: *const AcsimTopology,
    x0: *const f64,
    x0_len: usize,
    out_json: *mut *mut c_char,
) -> AcsimStatus {
    guard(|| {
        if handle.is_null() || out_json.is_null() {
            set_error("null pointer argument");
            return AcsimStatus::NullPointer;
        }
        let topo = unsafe { &*handle };
        let x0 = match unsafe { slice_arg(x0, x0_len, topo.topology.n(), "x0") } {
            Ok(v) => v,
            Err(status) => return status,
        };
        let report = analyze(&topo.f, x0);
        match serde_json::to_string_pretty(&report) {
            Ok(json) => return_string(out_json, json),
            Err(e) => {
                set_error(e.to_string());
                AcsimStatus::NumericFailure
            }
        }
    })
}

/// # Safety
/// `s` must be NULL or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn acsim_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Synchronous run `x(k+1) = F x(k)`.
///
/// # Safety
/// `handle` must be a live topology handle; `x0` must point to `x0_len`
/// doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn acsim_run_sync(
    handle: *const AcsimTopology,
    x0: *const f64,
    x0_len: usize,
    steps: usize,
    ctol: f64,
    out: *mut *mut AcsimTrajectory,
) -> AcsimStatus {
    guard(|| {
        if handle.is_null() || x0.is_null() || out.is_null() {
            set_error("null pointer argument");
            return AcsimStatus::NullPointer;
        }
        let topo = unsafe { &*handle };
        let x0 = match unsafe { slice_arg(x0, x0_len, topo.topology.n(), "x0") } {
            Ok(Some(v)) => v,
            Ok(None) => {
                set_error("x0 is required");
                return AcsimStatus::NullPointer;
            }
            Err(status) => return status,
        };
        let t = run_sync(&topo.f, x0, steps, ctol);
        unsafe { *out = Box::into_raw(Box::new(AcsimTrajectory { inner: t })) };
        AcsimStatus::Ok
    })
}

/// Asynchronous run with a seeded bounded-delay model.
///
/// # Safety
/// Same contract as [`acsim_run_sync`].
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn acsim_run_async(
    handle: *const AcsimTopology,
    x0: *const f64,
    x0_len: usize,
    kind: AcsimDelayKind,
    tau_d: u32,
    seed: u64,
    steps: usize,
    ctol: f64,
    out: *mut *mut AcsimTrajectory,
) -> AcsimStatus {
    guard(|| {
        if handle.is_null() || x0.is_null() || out.is_null() {
            set_error("null pointer argument");
            return AcsimStatus::NullPointer;
        }
        let topo = unsafe { &*handle };
        let x0 = match unsafe { slice_arg(x0, x0_len, topo.topology.n(), "x0") } {
            Ok(Some(v)) => v,
            Ok(None) => {
                set_error("x0 is required");
                return AcsimStatus::NullPointer;
            }
            Err(status) => return status,
        };
        let dm = DelayModel {
            kind: kind.into(),
            tau_d,
            seed,
        };
        match run_async(&topo.f, x0, &dm, steps, ctol) {
            Ok(t) => {
                unsafe { *out = Box::into_raw(Box::new(AcsimTrajectory { inner: t })) };
                AcsimStatus::Ok
            }
            Err(e) => {
                set_error(e.to_string());
                AcsimStatus::InvalidArgument
            }
        }
    })
}

/// Number of stored states (steps + 1).
///
/// # Safety
/// `handle` must be a live trajectory handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn acsim_trajectory_len(
    handle: *const AcsimTrajectory,
    out: *mut usize,
) -> AcsimStatus {
    guard(|| {
        if handle.is_null() || out.is_null() {
            set_error("null pointer argument");
            return AcsimStatus::NullPointer;
        }
        unsafe { *out = (*handle).inner.states.len() };
        AcsimStatus::Ok
    })
}

/// Copies the state at `step` into `buf`.
///
/// # Safety
/// `handle` must be a live trajectory handle; `buf` must point to `buf_len`
/// writable doubles.
#[no_mangle]
pub unsafe extern "C" fn acsim_trajectory_state(
    handle: *const AcsimTrajectory,
    step: usize,
    buf: *mut f64,
    buf_len: usize,
) -> AcsimStatus {
    guard(|| {
        if handle.is_null() || buf.is_null() {
            set_error("null pointer argument");
            return AcsimStatus::NullPointer;
        }
        let t = unsafe { &(*handle).inner };
        let Some(state) = t.states.get(step) else {
            set_error(format!(
                "step {step} out of range ({} states)",
                t.states.len()
            ));
            return AcsimStatus::InvalidArgument;
        };
        if buf_len != state.len() {
            set_error(format!(
                "buffer has {buf_len} entries, state has {}",
                state.len()
            ));
            return AcsimStatus::InvalidArgument;
        }
        unsafe { std::ptr::copy_nonoverlapping(state.as_ptr(), buf, state.len()) };
        AcsimStatus::Ok
    })
}

/// 2-norm of the state at `step`.
///
/// # Safety
/// `handle` must be a live trajectory handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn acsim_trajectory_norm(
    handle: *const AcsimTrajectory,
    step: usize,
    out: *mut f64,
) -> AcsimStatus {
    guard(|| {
        if handle.is_null() || out.is_null() {
            set_error("null pointer argument");
            return AcsimStatus::NullPointer;
        }
        let t = unsafe { &(*handle).inner };
        let Some(norm) = t.norm_track.get(step) else {
            set_error(format!(
                "step {step} out of range ({} states)",
                t.norm_track.len()
            ));
            return AcsimStatus::InvalidArgument;
        };
        unsafe { *out = *norm };
        AcsimStatus::Ok
    })
}

/// Consensus verdict: `*converged` is 0/1; on 1 the step and value are
/// written too.
///
/// # Safety
/// `handle` must be a live trajectory handle; all out-pointers must be
/// valid.
#[no_mangle]
pub unsafe extern "C" fn acsim_trajectory_consensus(
    handle: *const AcsimTrajectory,
    converged: *mut i32,
    step: *mut usize,
    value: *mut f64,
) -> AcsimStatus {
    guard(|| {
        if handle.is_null() || converged.is_null() || step.is_null() || value.is_null() {
            set_error("null pointer argument");
            return AcsimStatus::NullPointer;
        }
        match unsafe { &(*handle).inner }.consensus {
            Some(c) => unsafe {
                *converged = 1;
                *step = c.step;
                *value = c.value;
            },
            None => unsafe {
                *converged = 0;
            },
        }
        AcsimStatus::Ok
    })
}

/// # Safety
/// `handle` must be NULL or a pointer from a run function, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn acsim_trajectory_free(handle: *mut AcsimTrajectory) {
    if !handle.is_null() {
        drop(unsafe { Box::from_raw(handle) });
    }
}

/// Seeded Monte Carlo ensemble; the summary (statistics, per-sample
/// consensus values, discrepancy against the synchronous run, structural
/// analysis) is returned as JSON.
///
/// # Safety
/// Same pointer contract as [`acsim_run_async`] with `out_json` valid.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn acsim_monte_carlo_json(
    handle: *const AcsimTopology,
    x0: *const f64,
    x0_len: usize,
    kind: AcsimDelayKind,
    tau_d: u32,
    master_seed: u64,
    samples: usize,
    steps: usize,
    ctol: f64,
    out_json: *mut *mut c_char,
) -> AcsimStatus {
    guard(|| {
        if handle.is_null() || x0.is_null() || out_json.is_null() {
            set_error("null pointer argument");
            return AcsimStatus::NullPointer;
        }
        if samples == 0 {
            set_error("samples must be at least 1");
            return AcsimStatus::InvalidArgument;
        }
        let topo = unsafe { &*handle };
        let x0 = match unsafe { slice_arg(x0, x0_len, topo.topology.n(), "x0") } {
            Ok(Some(v)) => v,
            Ok(None) => {
                set_error("x0 is required");
                return AcsimStatus::NullPointer;
            }
            Err(status) => return status,
        };
        let dm = DelayModel {
            kind: kind.into(),
            tau_d,
            seed: master_seed,
        };
        let ensemble = match monte_carlo(&topo.f, x0, &dm, samples, steps, ctol) {
            Ok(e) => e,
            Err(e) => {
                set_error(e.to_string());
                return AcsimStatus::NumericFailure;
            }
        };
        let sync = run_sync(&topo.f, x0, steps, ctol);
        let discrepancy = sync
            .consensus
            .map(|c| discrepancy_report(c.value, &ensemble));
        let report = analyze(&topo.f, Some(x0));
        let summary =
            acsim::output::ensemble_summary_json(&ensemble, discrepancy.as_ref(), Some(&report));
        match serde_json::to_string_pretty(&summary) {
            Ok(json) => return_string(out_json, json),
            Err(e) => {
                set_error(e.to_string());
                AcsimStatus::NumericFailure
            }
        }
    })
}
