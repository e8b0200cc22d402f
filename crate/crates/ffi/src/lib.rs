//! C ABI for sitrace.
//!
//! Handles are opaque and owned by the caller once returned; release them
//! with the matching `_free` function. Every fallible entry point returns a
//! [`SitraceStatus`]. After a status other than `Ok`, `Fail` or
//! `Inconclusive`, [`sitrace_last_error`] describes the cause on the calling
//! thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use sitrace::certificate::{Certificate, Verdict};
use sitrace::cli::harness::run_properties;
use sitrace::cli::{Report, RunConfig};
use sitrace::gramian::{certify_ntf, CertifyMode};
use sitrace::grid::Grid;
use sitrace::lattice::{DilationMatrix, IndexWindow};
use sitrace::spectra::{parse_selector, GeneratorSystem};
use sitrace::trace::{dimension_function, spectral_function, CertifiedSystem, TraceProfile};
use sitrace::wavelet::{characterize_ntf_wavelet, WaveletSystem};
use sitrace::Error;

/// Outcome of a call. The verdict codes match the command line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SitraceStatus {
    Ok = 0,
    Fail = 1,
    InvalidArgument = 2,
    NotCertified = 3,
    Inconclusive = 4,
    NullPointer = 5,
    Panic = 6,
}

/// Which trace profile [`sitrace_profile_new`] computes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SitraceProfileKind {
    /// Trace of the identity: the fiber dimension.
    Dimension = 0,
    /// Trace of the projection onto the zero coordinate, periodically
    /// extended.
    Spectral = 1,
}

/// A generator system together with its certification state.
pub struct SitraceSystem {
    system: GeneratorSystem,
    window: Option<IndexWindow>,
    certificate: Option<Certificate>,
}

/// Sample points, values and error bars of a trace profile.
pub struct SitraceProfile {
    profile: TraceProfile,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = text);
}

struct Failure(SitraceStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::NotCertified(_) => SitraceStatus::NotCertified,
            _ => SitraceStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(SitraceStatus::NullPointer, format!("`{what}` is null"))
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure(SitraceStatus::InvalidArgument, message.into())
}

fn guard(f: impl FnOnce() -> Result<SitraceStatus, Failure>) -> SitraceStatus {
    set_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(status)) => status,
        Ok(Err(Failure(status, message))) => {
            set_error(&message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SitraceStatus::Panic
        }
    }
}

fn verdict_status(v: Verdict) -> SitraceStatus {
    match v {
        Verdict::Pass => SitraceStatus::Ok,
        Verdict::Fail => SitraceStatus::Fail,
        Verdict::Inconclusive => SitraceStatus::Inconclusive,
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("`{what}` is not UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sitrace_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or an empty string.
/// Valid until the next call into the library from this thread.
#[no_mangle]
pub extern "C" fn sitrace_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Build a system from a catalog selector such as `bspline:2` or
/// `shannon-scaling+shannon-wavelet`.
///
/// # Safety
/// `selector` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sitrace_system_new(selector: *const c_char, out: *mut *mut SitraceSystem) -> SitraceStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let system = parse_selector(text(selector, "selector")?)?;
        *out = Box::into_raw(Box::new(SitraceSystem {
            system,
            window: None,
            certificate: None,
        }));
        Ok(SitraceStatus::Ok)
    })
}

/// # Safety
/// `sys` must come from [`sitrace_system_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sitrace_system_free(sys: *mut SitraceSystem) {
    if !sys.is_null() {
        drop(Box::from_raw(sys));
    }
}

/// # Safety
/// `sys` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sitrace_system_dim(sys: *const SitraceSystem, out: *mut usize) -> SitraceStatus {
    guard(|| {
        let s = handle(sys, "sys")?;
        *out.as_mut().ok_or_else(|| null("out"))? = s.system.dim();
        Ok(SitraceStatus::Ok)
    })
}

/// Certify the system as a normalized tight frame generator on a grid of
/// `grid` points per axis with window radius `window`. Returns the verdict
/// as a status; on `Ok` or `Inconclusive` the handle is certified for that
/// window. `max_residual` may be null.
///
/// # Safety
/// `sys` must be a live handle; `max_residual` must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn sitrace_system_certify(
    sys: *mut SitraceSystem,
    grid: usize,
    window: usize,
    tol: f64,
    max_residual: *mut f64,
) -> SitraceStatus {
    guard(|| {
        let s = sys.as_mut().ok_or_else(|| null("sys"))?;
        if !(tol > 0.0 && tol < 1.0) {
            return Err(invalid(format!("tolerance {tol} is not in (0, 1)")));
        }
        let n = s.system.dim();
        let g = Grid::base(n, grid)?;
        let w = IndexWindow::new(n, window)?;
        let cert = certify_ntf(&s.system, &g, &w, tol, CertifyMode::Projection, None)?;
        if let Some(r) = max_residual.as_mut() {
            *r = cert.max_residual;
        }
        let status = verdict_status(cert.verdict);
        if cert.verdict == Verdict::Fail {
            s.window = None;
            s.certificate = None;
        } else {
            s.window = Some(w);
            s.certificate = Some(cert);
        }
        Ok(status)
    })
}

/// Skip certification and use window radius `window` for later profiles.
///
/// # Safety
/// `sys` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sitrace_system_unchecked(sys: *mut SitraceSystem, window: usize) -> SitraceStatus {
    guard(|| {
        let s = sys.as_mut().ok_or_else(|| null("sys"))?;
        s.window = Some(IndexWindow::new(s.system.dim(), window)?);
        s.certificate = None;
        Ok(SitraceStatus::Ok)
    })
}

/// Compute a trace profile on a base grid of `grid` points per axis. The
/// system must have been certified or marked unchecked first.
///
/// # Safety
/// `sys` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sitrace_profile_new(
    sys: *const SitraceSystem,
    kind: SitraceProfileKind,
    grid: usize,
    out: *mut *mut SitraceProfile,
) -> SitraceStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let s = handle(sys, "sys")?;
        let w = s.window.as_ref().ok_or_else(|| {
            Failure(
                SitraceStatus::NotCertified,
                "system is neither certified nor marked unchecked".into(),
            )
        })?;
        let cs = match &s.certificate {
            Some(c) => CertifiedSystem::from_certificate(s.system.clone(), w, c.clone())?,
            None => CertifiedSystem::unchecked(s.system.clone(), w),
        };
        let g = Grid::base(s.system.dim(), grid)?;
        let profile = match kind {
            SitraceProfileKind::Dimension => dimension_function(&cs, &g)?,
            SitraceProfileKind::Spectral => spectral_function(&cs, &g)?,
        };
        *out = Box::into_raw(Box::new(SitraceProfile { profile }));
        Ok(SitraceStatus::Ok)
    })
}

/// # Safety
/// `p` must come from [`sitrace_profile_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sitrace_profile_free(p: *mut SitraceProfile) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Number of sample points, or 0 for a null handle.
///
/// # Safety
/// `p` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sitrace_profile_len(p: *const SitraceProfile) -> usize {
    p.as_ref().map_or(0, |p| p.profile.points.len())
}

/// Coordinates per sample point, or 0 for a null handle.
///
/// # Safety
/// `p` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sitrace_profile_dim(p: *const SitraceProfile) -> usize {
    p.as_ref()
        .and_then(|p| p.profile.points.first())
        .map_or(0, Vec::len)
}

/// Copy the profile out. `len` must equal [`sitrace_profile_len`]; `points`
/// receives `len * dim` coordinates row by row. Any output may be null.
///
/// # Safety
/// Each non-null output must have room for the stated number of doubles.
#[no_mangle]
pub unsafe extern "C" fn sitrace_profile_copy(
    p: *const SitraceProfile,
    points: *mut f64,
    values: *mut f64,
    errors: *mut f64,
    len: usize,
) -> SitraceStatus {
    guard(|| {
        let p = &handle(p, "profile")?.profile;
        if len != p.points.len() {
            return Err(invalid(format!("profile has {} points, buffer holds {len}", p.points.len())));
        }
        if !points.is_null() {
            let flat: Vec<f64> = p.points.iter().flatten().copied().collect();
            ptr::copy_nonoverlapping(flat.as_ptr(), points, flat.len());
        }
        if !values.is_null() {
            ptr::copy_nonoverlapping(p.values.as_ptr(), values, len);
        }
        if !errors.is_null() {
            ptr::copy_nonoverlapping(p.errors.as_ptr(), errors, len);
        }
        Ok(SitraceStatus::Ok)
    })
}

/// Check the tight frame characterization equations of a wavelet set
/// under the row-major dilation matrix. Returns the verdict as a status.
/// `max_residual` may be null.
///
/// # Safety
/// `selector` must be a NUL-terminated string, `dilation` must point to
/// `dilation_len` integers and `max_residual` must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn sitrace_verify_wavelet(
    selector: *const c_char,
    dilation: *const i64,
    dilation_len: usize,
    grid: usize,
    depth: usize,
    s_range: usize,
    tol: f64,
    max_residual: *mut f64,
) -> SitraceStatus {
    guard(|| {
        let psis = parse_selector(text(selector, "selector")?)?;
        if dilation.is_null() {
            return Err(null("dilation"));
        }
        let entries = std::slice::from_raw_parts(dilation, dilation_len).to_vec();
        let n = (dilation_len as f64).sqrt().round() as usize;
        if n * n != dilation_len {
            return Err(invalid(format!("{dilation_len} entries do not form a square matrix")));
        }
        if !(tol > 0.0 && tol < 1.0) {
            return Err(invalid(format!("tolerance {tol} is not in (0, 1)")));
        }
        let ws = WaveletSystem::new(psis, DilationMatrix::new(n, entries)?, depth, true)?;
        let r = characterize_ntf_wavelet(&ws, &Grid::base(n, grid)?, s_range, tol)?;
        if let Some(m) = max_residual.as_mut() {
            *m = r.certificate.max_residual;
        }
        Ok(verdict_status(r.certificate.verdict))
    })
}

/// Run the identity harness and return the JSON report through `out`
/// (release it with [`sitrace_string_free`]). `config` holds configuration
/// file text and may be null for the defaults. Returns the overall verdict.
///
/// # Safety
/// `config` must be null or a NUL-terminated string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sitrace_properties_json(config: *const c_char, out: *mut *mut c_char) -> SitraceStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let cfg = if config.is_null() {
            RunConfig::default()
        } else {
            RunConfig::parse(text(config, "config")?)?
        };
        let (checks, notes) = run_properties(&cfg)?;
        let mut report = Report::new("properties", &cfg);
        report.notes = notes;
        for c in checks {
            report.push(c);
        }
        let json = CString::new(report.to_json()).map_err(|e| invalid(e.to_string()))?;
        *out = json.into_raw();
        Ok(verdict_status(report.verdict()))
    })
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn sitrace_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
