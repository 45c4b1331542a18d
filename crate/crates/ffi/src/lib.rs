//! C interface to `fgnls`.
//!
//! Surfaces and amplitude contexts are opaque heap handles created by `fgnls_*_new`
//! style constructors and released with the matching `*_free`. Every fallible call
//! returns an [`FgnlsStatus`]; the message of the last failure on the calling thread is
//! available through [`fgnls_last_error_message`]. Complex outputs are returned as
//! separate real and imaginary parts, matrices in row-major order.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use fgnls::amplitude::{AmplitudeContext, PhasePoint};
use fgnls::error::Error;
use fgnls::periods::PeriodData;
use fgnls::surface::{validate, Surface, SurfaceJson, SurfaceSpec};
use nalgebra::DVector;
use num_complex::Complex64 as C64;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FgnlsStatus {
    Ok = 0,
    NullPointer = 1,
    /// Invalid surface data or arguments.
    InvalidInput = 2,
    /// Quadrature, theta or linear-algebra failure.
    Numerical = 3,
    /// An array length does not match the genus.
    Dimension = 4,
    /// Internal panic caught at the boundary.
    Panic = 5,
}

/// Validated hyperelliptic surface.
pub struct FgnlsSurface {
    inner: Surface,
}

/// Surface together with its periods and theta data.
pub struct FgnlsContext {
    inner: AmplitudeContext,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> FgnlsStatus {
    match e {
        Error::Dimension { .. } => FgnlsStatus::Dimension,
        Error::EmptySurface
        | Error::OverlappingCuts(..)
        | Error::NonPositiveBandHeight(..)
        | Error::OrderingViolation(_)
        | Error::DuplicateBranchPoint(_)
        | Error::InvalidArgument(_)
        | Error::WrongMode(_)
        | Error::GenusZero
        | Error::OnBranchCut(..) => FgnlsStatus::InvalidInput,
        _ => FgnlsStatus::Numerical,
    }
}

/// Runs `body`, converting errors and panics to a status and recording the message.
fn guard(body: impl FnOnce() -> Result<(), (FgnlsStatus, String)>) -> FgnlsStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => FgnlsStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            FgnlsStatus::Panic
        }
    }
}

fn lib(e: Error) -> (FgnlsStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (FgnlsStatus, String) {
    (FgnlsStatus::NullPointer, format!("{what} is null"))
}

unsafe fn input<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], (FgnlsStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn output<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], (FgnlsStatus, String)> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

unsafe fn write<T>(p: *mut T, v: T, what: &str) -> Result<(), (FgnlsStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    *p = v;
    Ok(())
}

fn expect_len(len: usize, expected: usize) -> Result<(), (FgnlsStatus, String)> {
    if len != expected {
        return Err(lib(Error::Dimension { expected, got: len }));
    }
    Ok(())
}

fn new_surface(spec: SurfaceSpec, out: *mut *mut FgnlsSurface) -> Result<(), (FgnlsStatus, String)> {
    if out.is_null() {
        return Err(null("out"));
    }
    let s = validate(spec).map_err(lib)?;
    unsafe { *out = Box::into_raw(Box::new(FgnlsSurface { inner: s })) };
    Ok(())
}

/// Focusing surface from the `n` upper endpoints `re[j] + i·im[j]` of the vertical cuts.
///
/// # Safety
/// `re` and `im` must point to `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fgnls_surface_focusing(
    re: *const f64,
    im: *const f64,
    n: usize,
    out: *mut *mut FgnlsSurface,
) -> FgnlsStatus {
    guard(|| {
        let re = input(re, n, "re")?;
        let im = input(im, n, "im")?;
        let alphas = re.iter().zip(im).map(|(&a, &b)| C64::new(a, b)).collect();
        new_surface(SurfaceSpec::Focusing { alphas }, out)
    })
}

/// Defocusing surface from the `n` real bands `(beta[j], alpha[j])`.
///
/// # Safety
/// `beta` and `alpha` must point to `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fgnls_surface_defocusing(
    beta: *const f64,
    alpha: *const f64,
    n: usize,
    out: *mut *mut FgnlsSurface,
) -> FgnlsStatus {
    guard(|| {
        let beta = input(beta, n, "beta")?;
        let alpha = input(alpha, n, "alpha")?;
        let bands = beta.iter().zip(alpha).map(|(&b, &a)| (b, a)).collect();
        new_surface(SurfaceSpec::Defocusing { bands }, out)
    })
}

/// Surface from its JSON description (`{"mode": ..., "alphas": ...}` or `{"bands": ...}`).
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fgnls_surface_from_json(json: *const c_char, out: *mut *mut FgnlsSurface) -> FgnlsStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| (FgnlsStatus::InvalidInput, e.to_string()))?;
        let raw: SurfaceJson =
            serde_json::from_str(text).map_err(|e| (FgnlsStatus::InvalidInput, e.to_string()))?;
        new_surface(raw.into_spec().map_err(lib)?, out)
    })
}

/// # Safety
/// `surface` must come from a surface constructor and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fgnls_surface_free(surface: *mut FgnlsSurface) {
    if !surface.is_null() {
        drop(Box::from_raw(surface));
    }
}

/// Genus of the surface, 0 for a null handle.
///
/// # Safety
/// `surface` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fgnls_surface_genus(surface: *const FgnlsSurface) -> usize {
    surface.as_ref().map_or(0, |s| s.inner.genus())
}

/// `Σ b_j`, the amplitude bound; NaN for a null handle.
///
/// # Safety
/// `surface` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fgnls_surface_band_sum(surface: *const FgnlsSurface) -> f64 {
    surface.as_ref().map_or(f64::NAN, |s| s.inner.band_sum())
}

/// Computes periods and theta data. `tol` is the quadrature tolerance, `0` for the default.
///
/// # Safety
/// `surface` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fgnls_context_new(
    surface: *const FgnlsSurface,
    tol: f64,
    out: *mut *mut FgnlsContext,
) -> FgnlsStatus {
    guard(|| {
        let s = surface.as_ref().ok_or_else(|| null("surface"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let tol = if tol == 0.0 { fgnls::quadrature::DEFAULT_TOLERANCE } else { tol };
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(lib(Error::InvalidArgument(format!("tolerance {tol}"))));
        }
        let pd = PeriodData::compute_with(&s.inner, tol).map_err(lib)?;
        let ctx = AmplitudeContext::new(s.inner.clone(), pd).map_err(lib)?;
        *out = Box::into_raw(Box::new(FgnlsContext { inner: ctx }));
        Ok(())
    })
}

/// # Safety
/// `ctx` must come from [`fgnls_context_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fgnls_context_free(ctx: *mut FgnlsContext) {
    if !ctx.is_null() {
        drop(Box::from_raw(ctx));
    }
}

/// # Safety
/// `ctx` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fgnls_context_genus(ctx: *const FgnlsContext) -> usize {
    ctx.as_ref().map_or(0, |c| c.inner.genus())
}

/// Period matrix `τ`, `g·g` entries row-major.
///
/// # Safety
/// `re` and `im` must each hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn fgnls_period_matrix(
    ctx: *const FgnlsContext,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> FgnlsStatus {
    guard(|| {
        let c = ctx.as_ref().ok_or_else(|| null("ctx"))?;
        let g = c.inner.genus();
        expect_len(len, g * g)?;
        let re = output(re, len, "re")?;
        let im = output(im, len, "im")?;
        for i in 0..g {
            for j in 0..g {
                let v = c.inner.periods.tau[(i, j)];
                re[i * g + j] = v.re;
                im[i * g + j] = v.im;
            }
        }
        Ok(())
    })
}

/// Wavenumber and frequency vectors `V`, `W` of the phase `Ω = Vx + Wt + Ω⁰`.
///
/// # Safety
/// `v` and `w` must each hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn fgnls_flow_vectors(
    ctx: *const FgnlsContext,
    v: *mut f64,
    w: *mut f64,
    len: usize,
) -> FgnlsStatus {
    guard(|| {
        let c = ctx.as_ref().ok_or_else(|| null("ctx"))?;
        expect_len(len, c.inner.genus())?;
        output(v, len, "v")?.copy_from_slice(c.inner.periods.v.as_slice());
        output(w, len, "w")?.copy_from_slice(c.inner.periods.w.as_slice());
        Ok(())
    })
}

/// Amplitude ratio `f(Ω)`.
///
/// # Safety
/// `omega` must hold `len` doubles; `re`, `im` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fgnls_f_value(
    ctx: *const FgnlsContext,
    omega: *const f64,
    len: usize,
    re: *mut f64,
    im: *mut f64,
) -> FgnlsStatus {
    guard(|| {
        let c = ctx.as_ref().ok_or_else(|| null("ctx"))?;
        expect_len(len, c.inner.genus())?;
        let omega = PhasePoint::new(input(omega, len, "omega")?.to_vec());
        let f = c.inner.f_value(&omega).map_err(lib)?;
        write(re, f.re, "re")?;
        write(im, f.im, "im")
    })
}

/// `ψ(x, t)` for initial phase `Ω⁰`, including the plane-wave factor.
///
/// # Safety
/// `omega0` must hold `len` doubles; `re`, `im` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fgnls_psi(
    ctx: *const FgnlsContext,
    x: f64,
    t: f64,
    omega0: *const f64,
    len: usize,
    re: *mut f64,
    im: *mut f64,
) -> FgnlsStatus {
    guard(|| {
        let c = ctx.as_ref().ok_or_else(|| null("ctx"))?;
        expect_len(len, c.inner.genus())?;
        let omega0 = PhasePoint::new(input(omega0, len, "omega0")?.to_vec());
        let p = c.inner.psi_full(x, t, &omega0).map_err(lib)?;
        write(re, p.re, "re")?;
        write(im, p.im, "im")
    })
}

/// `Θ(z; τ)` at `z = z_re + i·z_im`.
///
/// # Safety
/// `z_re`, `z_im` must hold `len` doubles; `re`, `im` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fgnls_theta(
    ctx: *const FgnlsContext,
    z_re: *const f64,
    z_im: *const f64,
    len: usize,
    re: *mut f64,
    im: *mut f64,
) -> FgnlsStatus {
    guard(|| {
        let c = ctx.as_ref().ok_or_else(|| null("ctx"))?;
        expect_len(len, c.inner.genus())?;
        let zr = input(z_re, len, "z_re")?;
        let zi = input(z_im, len, "z_im")?;
        let z = DVector::from_iterator(len, zr.iter().zip(zi).map(|(&a, &b)| C64::new(a, b)));
        let v = c.inner.theta.theta(&z).map_err(lib)?;
        write(re, v.re, "re")?;
        write(im, v.im, "im")
    })
}

/// Largest defect of the jump condition of `Y` over `samples` points per cut.
///
/// # Safety
/// `omega` must hold `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fgnls_jump_residual(
    ctx: *const FgnlsContext,
    omega: *const f64,
    len: usize,
    samples: usize,
    out: *mut f64,
) -> FgnlsStatus {
    guard(|| {
        let c = ctx.as_ref().ok_or_else(|| null("ctx"))?;
        expect_len(len, c.inner.genus())?;
        let omega = PhasePoint::new(input(omega, len, "omega")?.to_vec());
        let r = c.inner.jump_residual(&omega, samples.max(1)).map_err(lib)?;
        write(out, r, "out")
    })
}

/// Copies the last error message of this thread into `buf` (NUL-terminated, truncated to
/// `len`) and returns the full message length excluding the terminator.
///
/// # Safety
/// `buf` must be null or hold `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn fgnls_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn fgnls_status_string(status: FgnlsStatus) -> *const c_char {
    let s: &'static CStr = match status {
        FgnlsStatus::Ok => c"ok",
        FgnlsStatus::NullPointer => c"null pointer",
        FgnlsStatus::InvalidInput => c"invalid input",
        FgnlsStatus::Numerical => c"numerical failure",
        FgnlsStatus::Dimension => c"dimension mismatch",
        FgnlsStatus::Panic => c"internal panic",
    };
    s.as_ptr()
}
