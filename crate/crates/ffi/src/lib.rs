//! C ABI over the `tsscreen` library.
//!
//! Objects cross the boundary as opaque handles owned by the caller and
//! released with the matching `*_free`. Every fallible call returns a
//! [`TssStatus`]; on failure a message is kept per thread and can be read
//! with [`tss_last_error`]. Matrices are row-major `n x p` arrays.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nalgebra::DMatrix;
use tsscreen::dgp::{self, PresetCase, PresetDist, PresetParams};
use tsscreen::error::Error;
use tsscreen::penreg::{self, TwoStageOptions};
use tsscreen::screen::{self, Method, Rule, ScreeningResult};

/// Status code returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TssStatus {
    Ok = 0,
    NullPointer = 1,
    /// Bad dimensions, parameters or configuration.
    InvalidArgument = 2,
    /// Numerical failure inside an estimator.
    Numerical = 3,
    /// Caller buffer is shorter than required.
    BufferTooSmall = 4,
    /// A Rust panic was caught at the boundary.
    Panic = 5,
}

/// Screening statistic.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TssMethod {
    Sis = 0,
    /// Banded GLS screening with the given band and taper flag.
    Glss = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TssCase {
    C1 = 0,
    C2a = 1,
    C2b = 2,
    C3a = 3,
    C3b = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TssDist {
    Gaussian = 0,
    T5 = 1,
}

/// Screening method and its parameters.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct TssScreenSpec {
    pub method: TssMethod,
    /// Band length (GLS only).
    pub band: usize,
    /// Nonzero to taper the autocovariances (GLS only).
    pub taper: i32,
    /// Nonzero to standardize columns before scoring.
    pub standardize: i32,
}

/// Covariates and response.
pub struct TssDataset {
    x: DMatrix<f64>,
    y: Vec<f64>,
}

/// Result of a screening run.
pub struct TssScreening {
    inner: ScreeningResult,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: TssStatus, msg: impl Into<String>) -> TssStatus {
    set_error(msg.into());
    status
}

fn from_error(e: Error) -> TssStatus {
    let status = if e.is_validation() { TssStatus::InvalidArgument } else { TssStatus::Numerical };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> TssStatus) -> TssStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(TssStatus::Panic, format!("panic: {msg}"))
        }
    }
}

/// Message for the last failure on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn tss_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Copy `x` (row-major `n x p`) and `y` (length `n`) into a new dataset.
///
/// # Safety
/// `x` must point to `n * p` doubles and `y` to `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tss_dataset_new(
    x: *const f64,
    y: *const f64,
    n: usize,
    p: usize,
    out: *mut *mut TssDataset,
) -> TssStatus {
    guard(|| {
        if x.is_null() || y.is_null() || out.is_null() {
            return fail(TssStatus::NullPointer, "null argument");
        }
        let Some(len) = n.checked_mul(p) else {
            return fail(TssStatus::InvalidArgument, "n * p overflows");
        };
        let xs = std::slice::from_raw_parts(x, len);
        let ys = std::slice::from_raw_parts(y, n);
        let ds = TssDataset { x: DMatrix::from_row_slice(n, p, xs), y: ys.to_vec() };
        *out = Box::into_raw(Box::new(ds));
        TssStatus::Ok
    })
}

/// # Safety
/// `ds` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tss_dataset_free(ds: *mut TssDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// # Safety
/// `ds` must be a live handle; `n` and `p` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn tss_dataset_dims(ds: *const TssDataset, n: *mut usize, p: *mut usize) -> TssStatus {
    let Some(ds) = ds.as_ref() else {
        return fail(TssStatus::NullPointer, "null dataset");
    };
    if !n.is_null() {
        *n = ds.x.nrows();
    }
    if !p.is_null() {
        *p = ds.x.ncols();
    }
    TssStatus::Ok
}

/// Copy the covariates (row-major) into `buf`, which holds `len` doubles.
///
/// # Safety
/// `ds` must be a live handle and `buf` writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn tss_dataset_copy_x(ds: *const TssDataset, buf: *mut f64, len: usize) -> TssStatus {
    let (Some(ds), false) = (ds.as_ref(), buf.is_null()) else {
        return fail(TssStatus::NullPointer, "null argument");
    };
    let (n, p) = ds.x.shape();
    if len < n * p {
        return fail(TssStatus::BufferTooSmall, format!("need {} doubles, got {len}", n * p));
    }
    let out = std::slice::from_raw_parts_mut(buf, n * p);
    for i in 0..n {
        for j in 0..p {
            out[i * p + j] = ds.x[(i, j)];
        }
    }
    TssStatus::Ok
}

/// Copy the response into `buf`, which holds `len` doubles.
///
/// # Safety
/// `ds` must be a live handle and `buf` writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn tss_dataset_copy_y(ds: *const TssDataset, buf: *mut f64, len: usize) -> TssStatus {
    let (Some(ds), false) = (ds.as_ref(), buf.is_null()) else {
        return fail(TssStatus::NullPointer, "null argument");
    };
    copy_out(&ds.y, buf, len)
}

unsafe fn copy_out<T: Copy>(src: &[T], buf: *mut T, len: usize) -> TssStatus {
    if len < src.len() {
        return fail(TssStatus::BufferTooSmall, format!("need {} elements, got {len}", src.len()));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    TssStatus::Ok
}

fn method(spec: &TssScreenSpec) -> Method {
    match spec.method {
        TssMethod::Sis => Method::Sis,
        TssMethod::Glss => Method::Glss { band: spec.band, taper: spec.taper != 0 },
    }
}

/// Draw replication `rep` of a built-in simulation scenario.
/// `gamma` is used by case C1 only.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tss_simulate_preset(
    case: TssCase,
    dist: TssDist,
    p: usize,
    gamma: f64,
    alpha: f64,
    seed: u64,
    rep: u64,
    out: *mut *mut TssDataset,
) -> TssStatus {
    guard(|| {
        if out.is_null() {
            return fail(TssStatus::NullPointer, "null output");
        }
        let case = match case {
            TssCase::C1 => PresetCase::C1,
            TssCase::C2a => PresetCase::C2a,
            TssCase::C2b => PresetCase::C2b,
            TssCase::C3a => PresetCase::C3a,
            TssCase::C3b => PresetCase::C3b,
        };
        let dist = match dist {
            TssDist::Gaussian => PresetDist::Gaussian,
            TssDist::T5 => PresetDist::T5,
        };
        let params = PresetParams { gamma: (case == PresetCase::C1).then_some(gamma), alpha, seed };
        let sim = match dgp::preset_design(case, p, dist, params).and_then(|d| dgp::generate(&d, rep)) {
            Ok(s) => s,
            Err(e) => return from_error(e),
        };
        *out = Box::into_raw(Box::new(TssDataset { x: sim.x, y: sim.y }));
        TssStatus::Ok
    })
}

/// Score every column and keep the top `d`.
///
/// # Safety
/// `ds` must be a live handle, `spec` readable and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tss_screen(
    ds: *const TssDataset,
    spec: *const TssScreenSpec,
    d: usize,
    out: *mut *mut TssScreening,
) -> TssStatus {
    guard(|| {
        let (Some(ds), Some(spec), false) = (ds.as_ref(), spec.as_ref(), out.is_null()) else {
            return fail(TssStatus::NullPointer, "null argument");
        };
        match screen::screen(&ds.x, &ds.y, method(spec), spec.standardize != 0, Rule::Top { d }) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(TssScreening { inner }));
                TssStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `s` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tss_screening_free(s: *mut TssScreening) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Number of selected columns, or 0 for a NULL handle.
///
/// # Safety
/// `s` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tss_screening_selected_len(s: *const TssScreening) -> usize {
    s.as_ref().map_or(0, |s| s.inner.selected.len())
}

/// Copy the `p` scores into `buf`.
///
/// # Safety
/// `s` must be a live handle and `buf` writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn tss_screening_scores(s: *const TssScreening, buf: *mut f64, len: usize) -> TssStatus {
    let (Some(s), false) = (s.as_ref(), buf.is_null()) else {
        return fail(TssStatus::NullPointer, "null argument");
    };
    copy_out(&s.inner.scores, buf, len)
}

/// Copy the column ranking (by decreasing |score|) into `buf`.
///
/// # Safety
/// `s` must be a live handle and `buf` writable for `len` elements.
#[no_mangle]
pub unsafe extern "C" fn tss_screening_ranking(s: *const TssScreening, buf: *mut usize, len: usize) -> TssStatus {
    let (Some(s), false) = (s.as_ref(), buf.is_null()) else {
        return fail(TssStatus::NullPointer, "null argument");
    };
    copy_out(&s.inner.ranking, buf, len)
}

/// Copy the selected columns (ascending) into `buf`.
///
/// # Safety
/// `s` must be a live handle and `buf` writable for `len` elements.
#[no_mangle]
pub unsafe extern "C" fn tss_screening_selected(s: *const TssScreening, buf: *mut usize, len: usize) -> TssStatus {
    let (Some(s), false) = (s.as_ref(), buf.is_null()) else {
        return fail(TssStatus::NullPointer, "null argument");
    };
    copy_out(&s.inner.selected, buf, len)
}

/// Two-stage adaptive Lasso with the modified BIC. With `spec` NULL the
/// selector runs on all columns; otherwise the top `d` screened columns.
/// Writes `p` coefficients to `coefs` and the intercept to `intercept`.
///
/// # Safety
/// `ds` must be a live handle, `coefs` writable for `len` doubles and
/// `intercept` writable or NULL.
#[no_mangle]
pub unsafe extern "C" fn tss_two_stage(
    ds: *const TssDataset,
    spec: *const TssScreenSpec,
    d: usize,
    coefs: *mut f64,
    len: usize,
    intercept: *mut f64,
) -> TssStatus {
    guard(|| {
        let (Some(ds), false) = (ds.as_ref(), coefs.is_null()) else {
            return fail(TssStatus::NullPointer, "null argument");
        };
        if len < ds.x.ncols() {
            return fail(TssStatus::BufferTooSmall, format!("need {} doubles, got {len}", ds.x.ncols()));
        }
        let opts = TwoStageOptions::default();
        let fit = match spec.as_ref() {
            Some(spec) => penreg::two_stage(&ds.x, &ds.y, method(spec), d, opts),
            None => penreg::adaptive_pipeline(&ds.x, &ds.y, opts),
        };
        match fit {
            Ok(fit) => {
                if !intercept.is_null() {
                    *intercept = fit.intercept;
                }
                copy_out(&fit.coefs, coefs, len)
            }
            Err(e) => from_error(e),
        }
    })
}

/// Closed-form asymptotic variances of the GLS (`j`) and OLS (`v`) slope
/// estimators for AR(1) errors (`alpha`) and AR(1) covariates (`phi`).
///
/// # Safety
/// `j` and `v` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tss_asy_var(
    alpha: f64,
    phi: f64,
    sigma_e2: f64,
    sigma_eta2: f64,
    j: *mut f64,
    v: *mut f64,
) -> TssStatus {
    if j.is_null() || v.is_null() {
        return fail(TssStatus::NullPointer, "null output");
    }
    match tsscreen::depmeas::asy_var_case2(alpha, phi, sigma_e2, sigma_eta2) {
        Ok((jj, vv)) => {
            *j = jj;
            *v = vv;
            TssStatus::Ok
        }
        Err(e) => from_error(e),
    }
}
