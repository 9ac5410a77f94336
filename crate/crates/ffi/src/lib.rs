//! C ABI for the ampflow library.
//!
//! Every function is `extern "C"`, panics are caught at the boundary, and
//! fallible calls return an [`AfStatus`].  Objects cross the boundary as
//! opaque pointers created by `af_*_new`/`af_*_sample` and released by the
//! matching `af_*_free`; freeing `NULL` is a no-op.  On any non-OK status
//! the thread-local message from [`af_last_error_message`] describes what
//! went wrong.
//!
//! The generated header lives at `include/ampflow.h`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use ampflow::{
    alternating_projection, amplitude_flow, chi_square_epsilon, observe, phase_dist,
    sample_matrix, sparse_amplitude_flow, AmpError, EntryDistribution, InitMode, NoiseKind,
    SensingMatrix, SolverConfig, SolverResult, SparseConfig,
};
use nalgebra::DVector;
use num_complex::Complex64;

/// Result of every fallible ABI call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AfStatus {
    /// The call succeeded.
    AfOk = 0,
    /// A required pointer argument was NULL.
    AfNullPointer = 1,
    /// A scalar argument was out of range or otherwise rejected.
    AfInvalidArgument = 2,
    /// Vector and matrix dimensions do not line up.
    AfDimensionMismatch = 3,
    /// The computation broke down numerically.
    AfNumericalFailure = 4,
    /// A panic was caught at the boundary; state may be stale but the
    /// process is intact.
    AfPanic = 5,
}

/// One complex number, laid out as two consecutive doubles.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct AfComplex {
    pub re: f64,
    pub im: f64,
}

/// Measurement ensembles available through the ABI.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AfEnsemble {
    /// Entries `CN(0, 1)`.
    AfEnsembleGaussian = 0,
    /// Real ternary entries: `+/- 1/sqrt(2p)` with probability `p` each.
    AfEnsembleTernary = 1,
    /// Entries `(+/- 1 +/- i) / sqrt(2)`.
    AfEnsembleRademacher = 2,
}

/// Opaque sensing matrix handle.
pub struct AfMatrix(SensingMatrix);

/// Opaque solver configuration handle.
pub struct AfConfig(SolverConfig);

/// Opaque solve outcome handle.
pub struct AfResult(SolverResult);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let cleaned: String = msg.chars().map(|c| if c == '\0' { ' ' } else { c }).collect();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(cleaned).unwrap_or_default();
    });
}

fn status_of(err: &AmpError) -> AfStatus {
    match err {
        AmpError::InvalidParameter { .. } => AfStatus::AfInvalidArgument,
        AmpError::DimensionMismatch(_) => AfStatus::AfDimensionMismatch,
        AmpError::Numerical { .. } => AfStatus::AfNumericalFailure,
        AmpError::Config(_) | AmpError::Io(_) | AmpError::Csv(_) | AmpError::Json(_) => {
            AfStatus::AfInvalidArgument
        }
    }
}

fn fail(err: &AmpError) -> AfStatus {
    set_error(&err.to_string());
    status_of(err)
}

/// Run `f` with panics converted to [`AfStatus::AfPanic`].
fn guarded(f: impl FnOnce() -> AfStatus) -> AfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic with non-string payload".to_string());
            set_error(&format!("panic: {msg}"));
            AfStatus::AfPanic
        }
    }
}

fn null_arg(name: &str) -> AfStatus {
    set_error(&format!("{name} is NULL"));
    AfStatus::AfNullPointer
}

unsafe fn complex_slice<'a>(ptr: *const AfComplex, len: usize) -> &'a [AfComplex] {
    if len == 0 {
        &[]
    } else {
        std::slice::from_raw_parts(ptr, len)
    }
}

fn to_dvector(xs: &[AfComplex]) -> DVector<Complex64> {
    DVector::from_iterator(xs.len(), xs.iter().map(|c| Complex64::new(c.re, c.im)))
}

/// Message describing the most recent non-OK status on this thread.  The
/// pointer stays valid until the next failing ABI call on the same thread.
#[no_mangle]
pub extern "C" fn af_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Short, static name for a status code.
#[no_mangle]
pub extern "C" fn af_status_name(status: AfStatus) -> *const c_char {
    let name: &'static [u8] = match status {
        AfStatus::AfOk => b"ok\0",
        AfStatus::AfNullPointer => b"null pointer\0",
        AfStatus::AfInvalidArgument => b"invalid argument\0",
        AfStatus::AfDimensionMismatch => b"dimension mismatch\0",
        AfStatus::AfNumericalFailure => b"numerical failure\0",
        AfStatus::AfPanic => b"panic\0",
    };
    name.as_ptr().cast()
}

/// Draw an `m x d` sensing matrix from `ensemble` with the given seed.
/// `p` is only read for the ternary ensemble and must lie in `(0, 0.5]`.
///
/// # Safety
/// `out` must point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn af_matrix_sample(
    ensemble: AfEnsemble,
    p: f64,
    m: usize,
    d: usize,
    seed: u64,
    out: *mut *mut AfMatrix,
) -> AfStatus {
    guarded(|| {
        if out.is_null() {
            return null_arg("out");
        }
        let dist = match ensemble {
            AfEnsemble::AfEnsembleGaussian => EntryDistribution::complex_gaussian(),
            AfEnsemble::AfEnsembleTernary => match EntryDistribution::ternary(p) {
                Ok(t) => t,
                Err(e) => return fail(&e),
            },
            AfEnsemble::AfEnsembleRademacher => EntryDistribution::complex_rademacher(),
        };
        match sample_matrix(&dist, m, d, seed) {
            Ok(a) => {
                *out = Box::into_raw(Box::new(AfMatrix(a)));
                AfStatus::AfOk
            }
            Err(e) => fail(&e),
        }
    })
}

/// Release a matrix.  NULL is ignored.
///
/// # Safety
/// `h` must have come from [`af_matrix_sample`] and not been freed before.
#[no_mangle]
pub unsafe extern "C" fn af_matrix_free(h: *mut AfMatrix) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Number of measurement rows, 0 on NULL.
///
/// # Safety
/// `h` must be a live matrix handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn af_matrix_rows(h: *const AfMatrix) -> usize {
    h.as_ref().map_or(0, |m| m.0.m)
}

/// Signal dimension, 0 on NULL.
///
/// # Safety
/// `h` must be a live matrix handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn af_matrix_cols(h: *const AfMatrix) -> usize {
    h.as_ref().map_or(0, |m| m.0.d)
}

/// Noiseless amplitudes `|<a_j, x>|` for a signal of length `d`, written to
/// `b_out[0..m]`.
///
/// # Safety
/// `x` must hold `d` entries and `b_out` room for `m` doubles.
#[no_mangle]
pub unsafe extern "C" fn af_matrix_amplitudes(
    h: *const AfMatrix,
    x: *const AfComplex,
    b_out: *mut f64,
) -> AfStatus {
    guarded(|| {
        let Some(mat) = h.as_ref() else {
            return null_arg("matrix");
        };
        if x.is_null() {
            return null_arg("x");
        }
        if b_out.is_null() {
            return null_arg("b_out");
        }
        let signal = to_dvector(complex_slice(x, mat.0.d));
        let eta = match ampflow::make_noise(&NoiseKind::Constant { value: 0.0 }, mat.0.m, 0) {
            Ok(n) => n,
            Err(e) => return fail(&e),
        };
        match observe(&mat.0, &signal, &eta) {
            Ok(ms) => {
                std::slice::from_raw_parts_mut(b_out, mat.0.m).copy_from_slice(ms.b.as_slice());
                AfStatus::AfOk
            }
            Err(e) => fail(&e),
        }
    })
}

/// Fresh solver configuration with the library defaults.
///
/// # Safety
/// `out` must point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn af_config_new(out: *mut *mut AfConfig) -> AfStatus {
    guarded(|| {
        if out.is_null() {
            return null_arg("out");
        }
        *out = Box::into_raw(Box::new(AfConfig(SolverConfig::default())));
        AfStatus::AfOk
    })
}

/// Release a configuration.  NULL is ignored.
///
/// # Safety
/// `h` must have come from [`af_config_new`] and not been freed before.
#[no_mangle]
pub unsafe extern "C" fn af_config_free(h: *mut AfConfig) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Cap on update steps.
///
/// # Safety
/// `h` must be a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn af_config_set_max_iters(h: *mut AfConfig, max_iters: usize) -> AfStatus {
    guarded(|| {
        let Some(cfg) = h.as_mut() else {
            return null_arg("config");
        };
        cfg.0.max_iters = max_iters;
        AfStatus::AfOk
    })
}

/// Reference gradient step size.
///
/// # Safety
/// `h` must be a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn af_config_set_step(h: *mut AfConfig, step: f64) -> AfStatus {
    guarded(|| {
        let Some(cfg) = h.as_mut() else {
            return null_arg("config");
        };
        cfg.0.step = step;
        AfStatus::AfOk
    })
}

/// Relative loss-change stopping tolerance.
///
/// # Safety
/// `h` must be a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn af_config_set_tol(h: *mut AfConfig, tol: f64) -> AfStatus {
    guarded(|| {
        let Some(cfg) = h.as_mut() else {
            return null_arg("config");
        };
        cfg.0.tol_rel_change = tol;
        AfStatus::AfOk
    })
}

/// Row-truncation threshold `gamma`; 0 disables truncation.
///
/// # Safety
/// `h` must be a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn af_config_set_truncation(h: *mut AfConfig, gamma: f64) -> AfStatus {
    guarded(|| {
        let Some(cfg) = h.as_mut() else {
            return null_arg("config");
        };
        cfg.0.trunc_gamma = gamma;
        AfStatus::AfOk
    })
}

/// Power iterations used by the spectral initializer.
///
/// # Safety
/// `h` must be a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn af_config_set_power_iters(h: *mut AfConfig, iters: usize) -> AfStatus {
    guarded(|| {
        let Some(cfg) = h.as_mut() else {
            return null_arg("config");
        };
        cfg.0.power_iters = iters;
        AfStatus::AfOk
    })
}

/// Start from the given vector (length `d`) instead of the spectral
/// initializer.
///
/// # Safety
/// `h` must be a live configuration handle and `x0` must hold `len` entries.
#[no_mangle]
pub unsafe extern "C" fn af_config_set_init(
    h: *mut AfConfig,
    x0: *const AfComplex,
    len: usize,
) -> AfStatus {
    guarded(|| {
        let Some(cfg) = h.as_mut() else {
            return null_arg("config");
        };
        if x0.is_null() {
            return null_arg("x0");
        }
        cfg.0.init = InitMode::Given(to_dvector(complex_slice(x0, len)));
        AfStatus::AfOk
    })
}

unsafe fn run_solver(
    h: *const AfMatrix,
    b: *const f64,
    cfg: *const AfConfig,
    out: *mut *mut AfResult,
    solve: impl FnOnce(&SensingMatrix, &DVector<f64>, &SolverConfig) -> Result<SolverResult, AmpError>,
) -> AfStatus {
    let Some(mat) = h.as_ref() else {
        return null_arg("matrix");
    };
    if b.is_null() {
        return null_arg("b");
    }
    if out.is_null() {
        return null_arg("out");
    }
    let obs = DVector::from_column_slice(std::slice::from_raw_parts(b, mat.0.m));
    let config = cfg.as_ref().map_or_else(SolverConfig::default, |c| c.0.clone());
    match solve(&mat.0, &obs, &config) {
        Ok(res) => {
            *out = Box::into_raw(Box::new(AfResult(res)));
            AfStatus::AfOk
        }
        Err(e) => fail(&e),
    }
}

/// Amplitude flow on observations `b[0..m]`.  `cfg` may be NULL for the
/// defaults.
///
/// # Safety
/// `h` must be a live matrix handle, `b` must hold `m` doubles, `out` must
/// point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn af_solve_amplitude_flow(
    h: *const AfMatrix,
    b: *const f64,
    cfg: *const AfConfig,
    out: *mut *mut AfResult,
) -> AfStatus {
    guarded(|| run_solver(h, b, cfg, out, |a, obs, c| amplitude_flow(a, obs, c, None)))
}

/// Alternating projection on observations `b[0..m]`; needs `m >= d`.  `cfg`
/// may be NULL for the defaults.
///
/// # Safety
/// `h` must be a live matrix handle, `b` must hold `m` doubles, `out` must
/// point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn af_solve_alternating_projection(
    h: *const AfMatrix,
    b: *const f64,
    cfg: *const AfConfig,
    out: *mut *mut AfResult,
) -> AfStatus {
    guarded(|| run_solver(h, b, cfg, out, |a, obs, c| alternating_projection(a, obs, c, None)))
}

/// Projected amplitude flow for `k`-sparse signals inside the l1 ball of
/// `radius`.  `cfg` may be NULL for the defaults.
///
/// # Safety
/// `h` must be a live matrix handle, `b` must hold `m` doubles, `out` must
/// point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn af_solve_sparse(
    h: *const AfMatrix,
    b: *const f64,
    radius: f64,
    k: usize,
    cfg: *const AfConfig,
    out: *mut *mut AfResult,
) -> AfStatus {
    guarded(|| {
        run_solver(h, b, cfg, out, |a, obs, c| {
            let scfg = SparseConfig {
                base: c.clone(),
                radius,
                epsilon: 0.0,
                k: Some(k),
            };
            sparse_amplitude_flow(a, obs, &scfg, None)
        })
    })
}

/// Release a result.  NULL is ignored.
///
/// # Safety
/// `h` must have come from a solve call and not been freed before.
#[no_mangle]
pub unsafe extern "C" fn af_result_free(h: *mut AfResult) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Length of the recovered signal, 0 on NULL.
///
/// # Safety
/// `h` must be a live result handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn af_result_dim(h: *const AfResult) -> usize {
    h.as_ref().map_or(0, |r| r.0.x.len())
}

/// Copy the recovered signal into `x_out[0..dim]`.
///
/// # Safety
/// `x_out` must have room for `af_result_dim(h)` entries.
#[no_mangle]
pub unsafe extern "C" fn af_result_copy_x(h: *const AfResult, x_out: *mut AfComplex) -> AfStatus {
    guarded(|| {
        let Some(res) = h.as_ref() else {
            return null_arg("result");
        };
        if x_out.is_null() {
            return null_arg("x_out");
        }
        let dst = std::slice::from_raw_parts_mut(x_out, res.0.x.len());
        for (d, v) in dst.iter_mut().zip(res.0.x.iter()) {
            *d = AfComplex { re: v.re, im: v.im };
        }
        AfStatus::AfOk
    })
}

/// Update steps performed, 0 on NULL.
///
/// # Safety
/// `h` must be a live result handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn af_result_iterations(h: *const AfResult) -> usize {
    h.as_ref().map_or(0, |r| r.0.iterations)
}

/// 1 when the run stopped with a first-order certificate, else 0.
///
/// # Safety
/// `h` must be a live result handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn af_result_converged(h: *const AfResult) -> i32 {
    h.as_ref().map_or(0, |r| i32::from(r.0.converged))
}

/// First-order optimality score at the final iterate, NaN on NULL.
///
/// # Safety
/// `h` must be a live result handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn af_result_stationarity(h: *const AfResult) -> f64 {
    h.as_ref().map_or(f64::NAN, |r| r.0.stationarity)
}

/// `sqrt(final loss)`, NaN on NULL.
///
/// # Safety
/// `h` must be a live result handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn af_result_final_residual(h: *const AfResult) -> f64 {
    h.as_ref().map_or(f64::NAN, |r| r.0.final_residual)
}

/// Distance between `x` and `y` (length `len`) up to a global phase,
/// written to `out`.
///
/// # Safety
/// `x` and `y` must hold `len` entries each; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn af_phase_dist(
    x: *const AfComplex,
    y: *const AfComplex,
    len: usize,
    out: *mut f64,
) -> AfStatus {
    guarded(|| {
        if x.is_null() {
            return null_arg("x");
        }
        if y.is_null() {
            return null_arg("y");
        }
        if out.is_null() {
            return null_arg("out");
        }
        let xv = to_dvector(complex_slice(x, len));
        let yv = to_dvector(complex_slice(y, len));
        match phase_dist(&xv, &yv) {
            Ok(v) => {
                *out = v;
                AfStatus::AfOk
            }
            Err(e) => fail(&e),
        }
    })
}

/// Data-fit radius for `m` observations at tail level `alpha`, written to
/// `out`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn af_chi_square_epsilon(m: usize, alpha: f64, out: *mut f64) -> AfStatus {
    guarded(|| {
        if out.is_null() {
            return null_arg("out");
        }
        match chi_square_epsilon(m, alpha) {
            Ok(v) => {
                *out = v;
                AfStatus::AfOk
            }
            Err(e) => fail(&e),
        }
    })
}
