//! C ABI for `hyperdual`.
//!
//! Every call returns an [`HdStatus`]; on failure the message is available
//! from [`hd_last_error`] on the same thread. Handles are opaque, created by
//! `*_new` or by a check, and released with the matching `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use hyperdual::cli::{criterion, parse_complex, report_json_string, selberg_check};
use hyperdual::hyperint::{corollary_ratio, duality_gap, integral_i, integral_k, IntegralSettings};
use hyperdual::model::{CheckReport, WeightData};
use hyperdual::quadrature::QuadratureConfig;
use hyperdual::selberg::{selberg_closed, SelbergParams};
use hyperdual::{Complex64, Error};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HdStatus {
    Ok = 0,
    /// Rejected input: bad weights, non-generic kappa, Im z <= 0, unparsable text.
    Config = 1,
    /// A Gamma pole or vanishing sine in a closed form.
    Math = 2,
    /// The contour could not be built.
    Geometry = 3,
    /// The integrand vanished or branch tracking failed.
    Integrand = 4,
    /// The quadrature missed its target.
    NoConvergence = 5,
    Ode = 6,
    NullPointer = 7,
    /// A Rust panic was caught at the boundary.
    Internal = 8,
}

/// A complex number.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HdComplex {
    pub re: f64,
    pub im: f64,
}

impl From<HdComplex> for Complex64 {
    fn from(c: HdComplex) -> Self {
        Complex64::new(c.re, c.im)
    }
}

impl From<Complex64> for HdComplex {
    fn from(c: Complex64) -> Self {
        HdComplex { re: c.re, im: c.im }
    }
}

/// Validated weight data `(m1, m2, l1, l2, kappa)`.
pub struct HdWeights(WeightData);

/// Outcome of a check, with its JSON rendering.
pub struct HdReport {
    report: CheckReport,
    json: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let text = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = text);
}

fn status_of(err: &Error) -> HdStatus {
    match err {
        Error::Config(_) | Error::Model(_) => HdStatus::Config,
        Error::Math(_) => HdStatus::Math,
        Error::Geometry(_) => HdStatus::Geometry,
        Error::Integrand(_) => HdStatus::Integrand,
        Error::Quadrature(q) => match q {
            hyperdual::error::QuadratureError::Integrand(_) => HdStatus::Integrand,
            hyperdual::error::QuadratureError::Geometry(_) => HdStatus::Geometry,
            hyperdual::error::QuadratureError::Config(_) => HdStatus::Config,
            hyperdual::error::QuadratureError::NoConvergence { .. } => HdStatus::NoConvergence,
        },
        Error::Ode(_) => HdStatus::Ode,
    }
}

/// Runs `f`, turning errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), Error>) -> HdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            HdStatus::Ok
        }
        Ok(Err(e)) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal error");
            HdStatus::Internal
        }
    }
}

fn null() -> Error {
    Error::Config("null pointer".into())
}

fn write<T>(out: *mut T, value: T) -> Result<(), Error> {
    if out.is_null() {
        return Err(null());
    }
    // SAFETY: non-null and, by contract, valid for writes.
    unsafe { out.write(value) };
    Ok(())
}

fn settings(target: f64) -> IntegralSettings {
    let mut s = IntegralSettings::default();
    if target > 0.0 {
        s.quadrature.target = target;
    }
    s
}

fn boxed_report(report: CheckReport, out: *mut *mut HdReport) -> Result<(), Error> {
    let text = report_json_string(&report, Default::default());
    let json = CString::new(text).map_err(|_| Error::Config("report contains NUL".into()))?;
    write(out, Box::into_raw(Box::new(HdReport { report, json })))
}

macro_rules! checked {
    ($status:expr, $($p:expr),+) => {{
        if $($p.is_null())||+ {
            set_error("null pointer");
            return HdStatus::NullPointer;
        }
        $status
    }};
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn hd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses `a+bi`.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hd_parse_complex(text: *const c_char, out: *mut HdComplex) -> HdStatus {
    checked!(
        guard(|| {
            // SAFETY: non-null, NUL-terminated by contract.
            let s = unsafe { CStr::from_ptr(text) }.to_str().map_err(|_| Error::Config("not UTF-8".into()))?;
            write(out, parse_complex(s)?.into())
        }),
        text,
        out
    )
}

/// Validates weight data and returns a handle.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hd_weights_new(m1: HdComplex, m2: i64, l1: HdComplex, l2: i64, kappa: f64, out: *mut *mut HdWeights) -> HdStatus {
    checked!(
        guard(|| {
            let wd = WeightData::new(m1.into(), m2, l1.into(), l2, kappa)?;
            write(out, Box::into_raw(Box::new(HdWeights(wd))))
        }),
        out
    )
}

/// # Safety
/// `w` must come from [`hd_weights_new`] and not be used afterwards; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn hd_weights_free(w: *mut HdWeights) {
    if !w.is_null() {
        // SAFETY: allocated by hd_weights_new.
        drop(unsafe { Box::from_raw(w) });
    }
}

/// The weights with the two pairs exchanged.
///
/// # Safety
/// `w` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hd_weights_swapped(w: *const HdWeights, out: *mut *mut HdWeights) -> HdStatus {
    checked!(
        guard(|| {
            // SAFETY: live handle by contract.
            let wd = unsafe { &(*w).0 };
            write(out, Box::into_raw(Box::new(HdWeights(wd.swapped()))))
        }),
        w,
        out
    )
}

/// Dimension of the weight subspace, `min(m2, l2) + 1`; 0 for a null handle.
///
/// # Safety
/// `w` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn hd_weights_dim(w: *const HdWeights) -> usize {
    if w.is_null() {
        return 0;
    }
    // SAFETY: live handle by contract.
    unsafe { (*w).0.dim() + 1 }
}

/// `K_{a,b}(z)`; `target <= 0` keeps the default quadrature target.
/// `err` receives the relative error estimate and may be null.
///
/// # Safety
/// `w` must be a live handle, `out` valid for writes, `err` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hd_integral_k(w: *const HdWeights, a: usize, b: usize, z: HdComplex, target: f64, out: *mut HdComplex, err: *mut f64) -> HdStatus {
    checked!(
        guard(|| {
            // SAFETY: live handle by contract.
            let wd = unsafe { &(*w).0 };
            let r = integral_k(a, b, z.into(), wd, &settings(target).quadrature)?;
            if !err.is_null() {
                write(err, r.error)?;
            }
            write(out, r.value.into())
        }),
        w,
        out
    )
}

/// `I_{a,b}(z) = C_b K_{a,b}(z)`, otherwise as [`hd_integral_k`].
///
/// # Safety
/// As for [`hd_integral_k`].
#[no_mangle]
pub unsafe extern "C" fn hd_integral_i(w: *const HdWeights, a: usize, b: usize, z: HdComplex, target: f64, out: *mut HdComplex, err: *mut f64) -> HdStatus {
    checked!(
        guard(|| {
            // SAFETY: live handle by contract.
            let wd = unsafe { &(*w).0 };
            let r = integral_i(a, b, z.into(), wd, &settings(target).quadrature)?;
            if !err.is_null() {
                write(err, r.error)?;
            }
            write(out, r.value.into())
        }),
        w,
        out
    )
}

/// Closed-form ratio `K_{a,b}(m1, m2, l1, l2) / K_{a,b}(l1, l2, m1, m2)`.
///
/// # Safety
/// `w` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hd_corollary_ratio(w: *const HdWeights, b: usize, out: *mut HdComplex) -> HdStatus {
    checked!(
        guard(|| {
            // SAFETY: live handle by contract.
            let wd = unsafe { &(*w).0 };
            write(out, corollary_ratio(b, wd)?.into())
        }),
        w,
        out
    )
}

/// Closed form of the Selberg-type integral `J_l(m)`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hd_selberg_closed(l: usize, m: HdComplex, kappa: f64, out: *mut HdComplex) -> HdStatus {
    checked!(
        guard(|| {
            let p = SelbergParams::new(l, m.into(), kappa)?;
            write(out, selberg_closed(&p)?.into())
        }),
        out
    )
}

/// Quadrature against closed form for `J_l(m)`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hd_selberg_check(l: usize, m: HdComplex, kappa: f64, tolerance: f64, out: *mut *mut HdReport) -> HdStatus {
    checked!(guard(|| boxed_report(selberg_check(l, m.into(), kappa, &QuadratureConfig::default(), tolerance)?, out)), out)
}

/// Entrywise gap between `Î(z)` on both sides of the duality.
///
/// # Safety
/// `w` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hd_duality_check(w: *const HdWeights, z: HdComplex, tolerance: f64, out: *mut *mut HdReport) -> HdStatus {
    checked!(
        guard(|| {
            // SAFETY: live handle by contract.
            let wd = unsafe { &(*w).0 };
            boxed_report(duality_gap(z.into(), wd, &IntegralSettings::default(), tolerance)?, out)
        }),
        w,
        out
    )
}

/// Acceptance criterion `n` in 1..=8.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hd_criterion(n: usize, out: *mut *mut HdReport) -> HdStatus {
    checked!(guard(|| boxed_report(criterion(n)?, out)), out)
}

/// 1 if the check passed, 0 if it failed or the handle is null.
///
/// # Safety
/// `r` must be a live report or null.
#[no_mangle]
pub unsafe extern "C" fn hd_report_pass(r: *const HdReport) -> i32 {
    if r.is_null() {
        return 0;
    }
    // SAFETY: live handle by contract.
    unsafe { (*r).report.pass as i32 }
}

/// Largest recorded error of the check; NaN for a null handle.
///
/// # Safety
/// `r` must be a live report or null.
#[no_mangle]
pub unsafe extern "C" fn hd_report_max_rel_err(r: *const HdReport) -> f64 {
    if r.is_null() {
        return f64::NAN;
    }
    // SAFETY: live handle by contract.
    unsafe { (*r).report.max_rel_err }
}

/// JSON rendering, owned by the report; null for a null handle.
///
/// # Safety
/// `r` must be a live report or null.
#[no_mangle]
pub unsafe extern "C" fn hd_report_json(r: *const HdReport) -> *const c_char {
    if r.is_null() {
        return ptr::null();
    }
    // SAFETY: live handle by contract.
    unsafe { (*r).json.as_ptr() }
}

/// # Safety
/// `r` must come from a check and not be used afterwards; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn hd_report_free(r: *mut HdReport) {
    if !r.is_null() {
        // SAFETY: allocated by boxed_report.
        drop(unsafe { Box::from_raw(r) });
    }
}
