//! C ABI for `nls-ist`.
//!
//! Objects are exposed as opaque handles created by `*_new`/`*_load` and
//! released with the matching `*_free`. Every fallible call returns an
//! [`NlsStatus`]; on failure a description is available from
//! [`nls_last_error_message`] until the next failing call on the same
//! thread. Complex numbers cross the boundary as separate real and
//! imaginary arrays.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use nls_ist::scattering::{self, SearchBox};
use nls_ist::soliton;
use nls_ist::{Complex64, Error, SampledPotential, ScatteringData, SolitonParams, Tolerances};

/// Status codes. `NLS_OK` is zero; everything else is an error.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NlsStatus {
    NlsOk = 0,
    NlsInvalidSample = 1,
    NlsInvalidInput = 2,
    NlsDomain = 3,
    NlsAccuracy = 4,
    NlsSpectralSingularity = 5,
    NlsCountMismatch = 6,
    NlsPoleNearBoundary = 7,
    NlsDependence = 8,
    NlsSingularSystem = 9,
    NlsNumerical = 10,
    NlsIo = 11,
    NlsNullPointer = 12,
    NlsBufferTooSmall = 13,
    NlsPanic = 14,
}

impl From<&Error> for NlsStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidSample { .. } => NlsStatus::NlsInvalidSample,
            Error::InvalidInput(_) | Error::Json(_) | Error::Csv(_) => NlsStatus::NlsInvalidInput,
            Error::Domain { .. } => NlsStatus::NlsDomain,
            Error::Accuracy(_) => NlsStatus::NlsAccuracy,
            Error::SpectralSingularity { .. } => NlsStatus::NlsSpectralSingularity,
            Error::CountMismatch { .. } => NlsStatus::NlsCountMismatch,
            Error::PoleNearBoundary { .. } => NlsStatus::NlsPoleNearBoundary,
            Error::Dependence { .. } => NlsStatus::NlsDependence,
            Error::SingularSystem { .. } => NlsStatus::NlsSingularSystem,
            Error::Io(_) => NlsStatus::NlsIo,
            _ => NlsStatus::NlsNumerical,
        }
    }
}

/// Sampled potential handle.
pub struct NlsPotential(SampledPotential);

/// Scattering data handle.
pub struct NlsScattering(ScatteringData);

/// Soliton parameter handle.
pub struct NlsSolitonParams(SolitonParams);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), (NlsStatus, String)>) -> NlsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NlsStatus::NlsOk,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            NlsStatus::NlsPanic
        }
    }
}

fn lib(e: Error) -> (NlsStatus, String) {
    (NlsStatus::from(&e), format!("{}: {e}", e.code()))
}

fn null(what: &str) -> (NlsStatus, String) {
    (NlsStatus::NlsNullPointer, format!("{what} is null"))
}

/// Last error message on this thread, or null if none. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn nls_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn nls_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

unsafe fn complex_slice(
    re: *const f64,
    im: *const f64,
    n: usize,
) -> Result<Vec<Complex64>, (NlsStatus, String)> {
    if n == 0 {
        return Ok(Vec::new());
    }
    if re.is_null() || im.is_null() {
        return Err(null("array"));
    }
    let re = std::slice::from_raw_parts(re, n);
    let im = std::slice::from_raw_parts(im, n);
    Ok(re
        .iter()
        .zip(im)
        .map(|(&a, &b)| Complex64::new(a, b))
        .collect())
}

unsafe fn write_complex(
    values: &[Complex64],
    re: *mut f64,
    im: *mut f64,
    cap: usize,
) -> Result<(), (NlsStatus, String)> {
    if cap < values.len() {
        return Err((
            NlsStatus::NlsBufferTooSmall,
            format!("need room for {} values, got {cap}", values.len()),
        ));
    }
    if values.is_empty() {
        return Ok(());
    }
    if re.is_null() || im.is_null() {
        return Err(null("output array"));
    }
    for (i, v) in values.iter().enumerate() {
        *re.add(i) = v.re;
        *im.add(i) = v.im;
    }
    Ok(())
}

unsafe fn write_scalar(
    v: Complex64,
    re: *mut f64,
    im: *mut f64,
) -> Result<(), (NlsStatus, String)> {
    if re.is_null() || im.is_null() {
        return Err(null("output"));
    }
    *re = v.re;
    *im = v.im;
    Ok(())
}

/// Creates a potential from `n` samples on `[x_min, x_max]`.
///
/// # Safety
/// `re` and `im` must point to `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nls_potential_new(
    x_min: f64,
    x_max: f64,
    re: *const f64,
    im: *const f64,
    n: usize,
    out: *mut *mut NlsPotential,
) -> NlsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let samples = complex_slice(re, im, n)?;
        let pot = SampledPotential::new(x_min, x_max, samples).map_err(lib)?;
        *out = Box::into_raw(Box::new(NlsPotential(pot)));
        Ok(())
    })
}

/// Loads a potential from a CSV or JSON file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nls_potential_load(
    path: *const c_char,
    out: *mut *mut NlsPotential,
) -> NlsStatus {
    guard(|| {
        if path.is_null() || out.is_null() {
            return Err(null("path or out"));
        }
        let p = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| (NlsStatus::NlsInvalidInput, "path is not UTF-8".into()))?;
        let pot = SampledPotential::load(Path::new(p)).map_err(lib)?;
        *out = Box::into_raw(Box::new(NlsPotential(pot)));
        Ok(())
    })
}

/// # Safety
/// `p` must come from `nls_potential_new`/`nls_potential_load` or be null.
#[no_mangle]
pub unsafe extern "C" fn nls_potential_free(p: *mut NlsPotential) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Number of samples, or 0 for a null handle.
///
/// # Safety
/// `p` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn nls_potential_len(p: *const NlsPotential) -> usize {
    p.as_ref().map_or(0, |p| p.0.n_points())
}

/// `a(z)` for `Im z ≥ 0`.
///
/// # Safety
/// `p` must be a live handle; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn nls_transmission_a(
    p: *const NlsPotential,
    z_re: f64,
    z_im: f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> NlsStatus {
    guard(|| {
        let p = p.as_ref().ok_or_else(|| null("potential"))?;
        let a = scattering::transmission_a(&p.0, Complex64::new(z_re, z_im)).map_err(lib)?;
        write_complex(&[a], out_re, out_im, 1)
    })
}

/// Full forward transform with default tolerances: `r` on `grid`, zeros
/// of `a` inside the box and their norming constants.
///
/// # Safety
/// `p` must be a live handle, `grid` must hold `n_grid` doubles and `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn nls_scatter(
    p: *const NlsPotential,
    grid: *const f64,
    n_grid: usize,
    re_min: f64,
    re_max: f64,
    im_min: f64,
    im_max: f64,
    out: *mut *mut NlsScattering,
) -> NlsStatus {
    guard(|| {
        let p = p.as_ref().ok_or_else(|| null("potential"))?;
        if out.is_null() || (grid.is_null() && n_grid > 0) {
            return Err(null("grid or out"));
        }
        let grid = if n_grid == 0 {
            &[][..]
        } else {
            std::slice::from_raw_parts(grid, n_grid)
        };
        let bx = SearchBox::new(re_min, re_max, im_min, im_max).map_err(lib)?;
        let sd = scattering::scatter(&p.0, grid, &bx, &Tolerances::default()).map_err(lib)?;
        *out = Box::into_raw(Box::new(NlsScattering(sd)));
        Ok(())
    })
}

/// # Safety
/// `s` must come from `nls_scatter` or be null.
#[no_mangle]
pub unsafe extern "C" fn nls_scattering_free(s: *mut NlsScattering) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Number of poles, or 0 for a null handle.
///
/// # Safety
/// `s` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn nls_scattering_pole_count(s: *const NlsScattering) -> usize {
    s.as_ref().map_or(0, |s| s.0.poles.len())
}

/// Copies poles and couplings into caller arrays of capacity `cap`.
///
/// # Safety
/// `s` must be a live handle; each output must hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn nls_scattering_poles(
    s: *const NlsScattering,
    poles_re: *mut f64,
    poles_im: *mut f64,
    couplings_re: *mut f64,
    couplings_im: *mut f64,
    cap: usize,
) -> NlsStatus {
    guard(|| {
        let s = s.as_ref().ok_or_else(|| null("scattering"))?;
        write_complex(&s.0.poles, poles_re, poles_im, cap)?;
        write_complex(&s.0.couplings, couplings_re, couplings_im, cap)
    })
}

/// Copies `r` on the real grid into caller arrays of capacity `cap`.
///
/// # Safety
/// `s` must be a live handle; each output must hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn nls_scattering_reflection(
    s: *const NlsScattering,
    r_re: *mut f64,
    r_im: *mut f64,
    cap: usize,
) -> NlsStatus {
    guard(|| {
        let s = s.as_ref().ok_or_else(|| null("scattering"))?;
        write_complex(&s.0.r_values, r_re, r_im, cap)
    })
}

/// Scattering data as a JSON document; free with `nls_string_free`.
/// Returns null on failure.
///
/// # Safety
/// `s` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn nls_scattering_to_json(s: *const NlsScattering) -> *mut c_char {
    let Some(s) = s.as_ref() else {
        set_error("scattering is null".into());
        return ptr::null_mut();
    };
    match serde_json::to_string(&s.0.to_envelope()) {
        Ok(text) => CString::new(text).map_or(ptr::null_mut(), CString::into_raw),
        Err(e) => {
            set_error(e.to_string());
            ptr::null_mut()
        }
    }
}

/// Creates soliton parameters from `n` poles and couplings.
///
/// # Safety
/// Each input array must hold `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nls_soliton_new(
    poles_re: *const f64,
    poles_im: *const f64,
    couplings_re: *const f64,
    couplings_im: *const f64,
    n: usize,
    out: *mut *mut NlsSolitonParams,
) -> NlsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let poles = complex_slice(poles_re, poles_im, n)?;
        let couplings = complex_slice(couplings_re, couplings_im, n)?;
        let params = SolitonParams::new(poles, couplings).map_err(lib)?;
        *out = Box::into_raw(Box::new(NlsSolitonParams(params)));
        Ok(())
    })
}

/// # Safety
/// `p` must come from `nls_soliton_new` or be null.
#[no_mangle]
pub unsafe extern "C" fn nls_soliton_free(p: *mut NlsSolitonParams) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// N-soliton value `u(x, t)`.
///
/// # Safety
/// `p` must be a live handle; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn nls_soliton_eval(
    p: *const NlsSolitonParams,
    x: f64,
    t: f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> NlsStatus {
    guard(|| {
        let p = p.as_ref().ok_or_else(|| null("params"))?;
        let u = soliton::n_soliton(&p.0, x, t).map_err(lib)?;
        write_scalar(u, out_re, out_im)
    })
}

/// Closed-form 1-soliton.
///
/// # Safety
/// Outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn nls_one_soliton(
    z_re: f64,
    z_im: f64,
    c_re: f64,
    c_im: f64,
    x: f64,
    t: f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> NlsStatus {
    guard(|| {
        let u = soliton::one_soliton(Complex64::new(z_re, z_im), Complex64::new(c_re, c_im), x, t)
            .map_err(lib)?;
        write_scalar(u, out_re, out_im)
    })
}
