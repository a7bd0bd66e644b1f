//! C ABI over the `elastic-mkv` solvers.
//!
//! Objects cross the boundary as opaque handles created by `emkv_*_new` or a
//! solver call and released with the matching `emkv_*_free`. Every fallible
//! function returns an [`EmkvStatus`]; on failure a description is available
//! from [`emkv_last_error`] on the same thread until the next failing call.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use elastic_mkv::mkv_solver::{blowup_guaranteed, gamma_zero_analytic};
use elastic_mkv::particle::{simulate_absorbing_with, simulate_elastic_with, AbsorbingStart, SimOptions, SimOutput};
use elastic_mkv::paths::Sampled;
use elastic_mkv::{Error, InitialLaw, ModelParams, RngStream, TimeGrid};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmkvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    GridMismatch = 3,
    SchemeViolation = 4,
    OutOfRange = 5,
    BufferTooSmall = 6,
    Panic = 7,
    Other = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmkvLawKind {
    /// `p0 = x0`.
    PointMass = 0,
    /// `p0 = a`, `p1 = b`.
    Uniform = 1,
    /// `p0 = shape`, `p1 = scale`.
    Gamma = 2,
    /// `p0 = shift`, `p1 = rate`.
    ShiftedExponential = 3,
}

/// Initial law as a tagged pair of parameters.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct EmkvLaw {
    pub kind: EmkvLawKind,
    pub p0: f64,
    pub p1: f64,
}

impl From<EmkvLaw> for InitialLaw {
    fn from(l: EmkvLaw) -> Self {
        match l.kind {
            EmkvLawKind::PointMass => InitialLaw::PointMass { x0: l.p0 },
            EmkvLawKind::Uniform => InitialLaw::Uniform { a: l.p0, b: l.p1 },
            EmkvLawKind::Gamma => InitialLaw::Gamma { shape: l.p0, scale: l.p1 },
            EmkvLawKind::ShiftedExponential => InitialLaw::ShiftedExponential { shift: l.p0, rate: l.p1 },
        }
    }
}

/// Opaque model parameters.
pub struct EmkvParams(ModelParams);

/// Opaque particle-simulation result.
pub struct EmkvSimOutput(SimOutput);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> EmkvStatus {
    match e {
        Error::InvalidParameter(_) | Error::Config(_) => EmkvStatus::InvalidParameter,
        Error::GridMismatch(_) => EmkvStatus::GridMismatch,
        Error::SchemeViolation { .. } => EmkvStatus::SchemeViolation,
        Error::PathsNotStored(_) => EmkvStatus::OutOfRange,
        _ => EmkvStatus::Other,
    }
}

fn fail(status: EmkvStatus, msg: impl Into<String>) -> EmkvStatus {
    set_error(msg.into());
    status
}

/// Run `f`, mapping library errors and panics to status codes.
fn guard(f: impl FnOnce() -> Result<(), EmkvStatus>) -> EmkvStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => EmkvStatus::Ok,
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(EmkvStatus::Panic, msg)
        }
    }
}

fn lib<T>(r: elastic_mkv::Result<T>) -> Result<T, EmkvStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), EmkvStatus> {
    if p.is_null() {
        Err(fail(EmkvStatus::NullPointer, format!("{name} is NULL")))
    } else {
        Ok(())
    }
}

/// Last error message on this thread, or NULL. Valid until the next failing
/// call on the same thread.
#[no_mangle]
pub extern "C" fn emkv_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn emkv_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Create validated parameters. `*out` must be released with
/// [`emkv_params_free`].
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn emkv_params_new(
    alpha: f64,
    kappa: f64,
    law: EmkvLaw,
    t_end: f64,
    n_steps: usize,
    n_particles: usize,
    out: *mut *mut EmkvParams,
) -> EmkvStatus {
    guard(|| {
        non_null(out, "out")?;
        let grid = lib(TimeGrid::new(t_end, n_steps))?;
        let p = ModelParams { alpha, kappa, law: law.into(), grid, n_particles };
        lib(p.validate())?;
        // SAFETY: checked non-null; caller guarantees it is writable
        unsafe { *out = Box::into_raw(Box::new(EmkvParams(p))) };
        Ok(())
    })
}

/// # Safety
/// `params` must be NULL or a handle from [`emkv_params_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn emkv_params_free(params: *mut EmkvParams) {
    if !params.is_null() {
        // SAFETY: handle came from Box::into_raw and is freed once
        drop(unsafe { Box::from_raw(params) });
    }
}

unsafe fn simulate(
    params: *const EmkvParams,
    out: *mut *mut EmkvSimOutput,
    run: impl FnOnce(&ModelParams) -> elastic_mkv::Result<SimOutput>,
) -> EmkvStatus {
    guard(|| {
        non_null(params, "params")?;
        non_null(out, "out")?;
        // SAFETY: checked non-null; caller guarantees a live handle
        let p = unsafe { &(*params).0 };
        let o = lib(run(p))?;
        // SAFETY: checked non-null; caller guarantees it is writable
        unsafe { *out = Box::into_raw(Box::new(EmkvSimOutput(o))) };
        Ok(())
    })
}

/// Simulate the elastic particle system. `bridge_correction` enables the
/// intra-step Brownian-bridge kill check.
///
/// # Safety
/// `params` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn emkv_simulate_elastic(
    params: *const EmkvParams,
    seed: u64,
    bridge_correction: bool,
    out: *mut *mut EmkvSimOutput,
) -> EmkvStatus {
    let opts = SimOptions { bridge_correction, ..Default::default() };
    unsafe { simulate(params, out, |p| simulate_elastic_with(p, &RngStream::new(seed, 0), &opts)) }
}

/// Simulate the absorbing system started at `X_{0-} + xi` from the same draws
/// as [`emkv_simulate_elastic`]; `kappa` must be positive.
///
/// # Safety
/// `params` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn emkv_simulate_absorbing(
    params: *const EmkvParams,
    seed: u64,
    bridge_correction: bool,
    out: *mut *mut EmkvSimOutput,
) -> EmkvStatus {
    let opts = SimOptions { bridge_correction, ..Default::default() };
    unsafe {
        simulate(params, out, |p| {
            simulate_absorbing_with(p, &RngStream::new(seed, 0), &AbsorbingStart::ElasticShift, &opts)
        })
    }
}

/// # Safety
/// `output` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn emkv_sim_free(output: *mut EmkvSimOutput) {
    if !output.is_null() {
        // SAFETY: handle came from Box::into_raw and is freed once
        drop(unsafe { Box::from_raw(output) });
    }
}

/// Number of time nodes, or 0 for NULL.
///
/// # Safety
/// `output` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn emkv_sim_n_nodes(output: *const EmkvSimOutput) -> usize {
    if output.is_null() {
        return 0;
    }
    // SAFETY: non-null live handle
    unsafe { (*output).0.loss_curve.grid().n_nodes() }
}

/// Copy the loss curve into `buf`, which must hold `emkv_sim_n_nodes` values.
///
/// # Safety
/// `output` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn emkv_sim_loss_curve(output: *const EmkvSimOutput, buf: *mut f64, len: usize) -> EmkvStatus {
    guard(|| {
        non_null(output, "output")?;
        non_null(buf, "buf")?;
        // SAFETY: non-null live handle
        let values = unsafe { (*output).0.loss_curve.values() };
        if len < values.len() {
            return Err(fail(EmkvStatus::BufferTooSmall, format!("buffer holds {len} values, need {}", values.len())));
        }
        // SAFETY: caller guarantees `len >= values.len()` writable slots
        unsafe { ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len()) };
        Ok(())
    })
}

/// Kill node of particle `index`, or -1 if it survives to the horizon.
///
/// # Safety
/// `output` must be a live handle and `node` writable.
#[no_mangle]
pub unsafe extern "C" fn emkv_sim_kill_node(output: *const EmkvSimOutput, index: usize, node: *mut i64) -> EmkvStatus {
    guard(|| {
        non_null(output, "output")?;
        non_null(node, "node")?;
        // SAFETY: non-null live handle
        let kills = unsafe { &(*output).0.kill_nodes };
        let k = kills
            .get(index)
            .ok_or_else(|| fail(EmkvStatus::OutOfRange, format!("particle {index} of {}", kills.len())))?;
        // SAFETY: checked non-null
        unsafe { *node = k.map_or(-1, i64::from) };
        Ok(())
    })
}

/// Largest single-node jump of the loss, or NaN for NULL.
///
/// # Safety
/// `output` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn emkv_sim_largest_jump(output: *const EmkvSimOutput) -> f64 {
    if output.is_null() {
        return f64::NAN;
    }
    // SAFETY: non-null live handle
    unsafe { (*output).0.summary.largest_jump }
}

/// `Gamma_kappa[0]_t` by quadrature.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn emkv_gamma_zero_analytic(t: f64, law: EmkvLaw, kappa: f64, out: *mut f64) -> EmkvStatus {
    guard(|| {
        non_null(out, "out")?;
        let v = lib(gamma_zero_analytic(t, &law.into(), kappa))?;
        // SAFETY: checked non-null
        unsafe { *out = v };
        Ok(())
    })
}

/// Whether `alpha > 2 (mean + 1/kappa)`, which forces a jump of the loss.
#[no_mangle]
pub extern "C" fn emkv_blowup_guaranteed(alpha: f64, law: EmkvLaw, kappa: f64) -> bool {
    blowup_guaranteed(alpha, &law.into(), kappa)
}
