//! C ABI for opgeom.
//!
//! Every entry point returns an [`OpgeomStatus`]; results go through out
//! pointers. Handles are opaque and must be released with the matching
//! `*_free` function. After a non-OK status the message is available from
//! [`opgeom_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, c_void, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use opgeom::cli::DEFAULT_TRUNCATION_EPS;
use opgeom::funcspace::{project_to_cpsi, psi_norm, EvaluationGrid, Function01};
use opgeom::operators::{AlphaProfile, Family, OperatorSpec};
use opgeom::series::{default_eps, GeometricSeriesResult, SeriesEngine};
use opgeom::Error;

/// Status codes returned by every function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpgeomStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NotInCpsi = 3,
    DegenerateOperator = 4,
    TruncationBudgetExceeded = 5,
    QuadratureNonConvergence = 6,
    SingularSystem = 7,
    PsiRatioOverflow = 8,
    Unsupported = 9,
    Internal = 10,
}

/// Geometric-series computation path.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpgeomMethod {
    Neumann = 0,
    Solve = 1,
}

/// A positive linear operator (family, order and parameters).
pub struct OpgeomOperator(OperatorSpec);

/// A function on [0, 1].
pub struct OpgeomFunction(Function01);

/// A computed geometric series G_L(f).
pub struct OpgeomSeries(GeometricSeriesResult);

/// Diagnostics of a geometric-series result.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct OpgeomSeriesInfo {
    pub terms_used: u64,
    pub tail_bound: f64,
    pub truncation_bound: f64,
    pub residual_psi_norm: f64,
    pub b_norm: f64,
    pub f_psi_norm: f64,
}

/// Grid statistics of α = 1 − L(ψ)/ψ.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct OpgeomAlphaStats {
    pub nu: f64,
    pub eta: f64,
    pub b_norm: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> OpgeomStatus {
    match e {
        Error::Domain(_)
        | Error::Index { .. }
        | Error::Parameter(_)
        | Error::StepTooSmall { .. }
        | Error::UnknownFunction(_)
        | Error::UnknownFamily(_)
        | Error::Config(_) => OpgeomStatus::InvalidArgument,
        Error::NotInCpsi { .. } => OpgeomStatus::NotInCpsi,
        Error::DegenerateOperator(_) => OpgeomStatus::DegenerateOperator,
        Error::TruncationBudgetExceeded { .. } => OpgeomStatus::TruncationBudgetExceeded,
        Error::QuadratureNonConvergence(_) => OpgeomStatus::QuadratureNonConvergence,
        Error::SingularSystem(_) => OpgeomStatus::SingularSystem,
        Error::PsiRatioOverflow { .. } => OpgeomStatus::PsiRatioOverflow,
        Error::Unsupported(_) => OpgeomStatus::Unsupported,
        Error::Io(_) => OpgeomStatus::Internal,
    }
}

enum Fail {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard<F: FnOnce() -> Result<(), Fail>>(body: F) -> OpgeomStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_error(String::new());
            OpgeomStatus::Ok
        }
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            OpgeomStatus::NullPointer
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            OpgeomStatus::Internal
        }
    }
}

unsafe fn get<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn put<T>(out: *mut T, v: T, what: &'static str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null(what));
    }
    out.write(v);
    Ok(())
}

unsafe fn text<'a>(s: *const c_char, what: &'static str) -> Result<&'a str, Fail> {
    if s.is_null() {
        return Err(Fail::Null(what));
    }
    CStr::from_ptr(s).to_str().map_err(|_| Fail::Lib(Error::Parameter(format!("{what} is not UTF-8"))))
}

fn grid(size: usize) -> Result<EvaluationGrid, Fail> {
    Ok(EvaluationGrid::chebyshev(if size == 0 { opgeom::funcspace::DEFAULT_GRID_SIZE } else { size })?)
}

/// Copies the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to `len` bytes) and returns the full message length.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn opgeom_last_error_message(buf: *mut c_char, len: usize) -> usize {
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

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn opgeom_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Creates an operator. `family` is one of "bernstein", "durrmeyer", "mkz",
/// "mkz-reflected", "mkz-symmetric". `rho` is read for durrmeyer only and
/// `truncation_eps` for the mkz families only (0 selects the default).
///
/// # Safety
/// `family` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn opgeom_operator_new(
    family: *const c_char,
    n: u32,
    rho: f64,
    truncation_eps: f64,
    out: *mut *mut OpgeomOperator,
) -> OpgeomStatus {
    guard(|| {
        let fam: Family = text(family, "family")?.parse()?;
        let rho = (fam == Family::Durrmeyer).then_some(rho);
        let teps = fam.is_mkz().then_some(if truncation_eps == 0.0 { DEFAULT_TRUNCATION_EPS } else { truncation_eps });
        let op = OperatorSpec::new(fam, n, rho, teps)?;
        put(out, Box::into_raw(Box::new(OpgeomOperator(op))), "out")
    })
}

/// # Safety
/// `op` must come from [`opgeom_operator_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn opgeom_operator_free(op: *mut OpgeomOperator) {
    if !op.is_null() {
        drop(Box::from_raw(op));
    }
}

/// L(f)(x).
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn opgeom_operator_apply(
    op: *const OpgeomOperator,
    f: *const OpgeomFunction,
    x: f64,
    out: *mut f64,
) -> OpgeomStatus {
    guard(|| {
        let v = get(op, "op")?.0.apply(&get(f, "f")?.0, x)?;
        put(out, v, "out")
    })
}

/// Central moment M^k(x) = L((t − x)^k)(x).
///
/// # Safety
/// `op` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn opgeom_operator_moment(op: *const OpgeomOperator, k: u32, x: f64, out: *mut f64) -> OpgeomStatus {
    guard(|| {
        let v = get(op, "op")?.0.moment(k, x)?;
        put(out, v, "out")
    })
}

/// α(x) = 1 − L(ψ)(x)/ψ(x) at an interior x.
///
/// # Safety
/// `op` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn opgeom_operator_alpha(op: *const OpgeomOperator, x: f64, out: *mut f64) -> OpgeomStatus {
    guard(|| {
        let v = get(op, "op")?.0.alpha_at(x)?;
        put(out, v, "out")
    })
}

/// ν, η and ‖b_L‖ on a Chebyshev grid of `grid_size` points (0 = default),
/// restricted to the operator's evaluation window.
///
/// # Safety
/// `op` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn opgeom_operator_alpha_stats(
    op: *const OpgeomOperator,
    grid_size: usize,
    out: *mut OpgeomAlphaStats,
) -> OpgeomStatus {
    guard(|| {
        let p = AlphaProfile::new(&get(op, "op")?.0, &grid(grid_size)?)?;
        put(out, OpgeomAlphaStats { nu: p.nu, eta: p.eta, b_norm: p.b_norm }, "out")
    })
}

/// A registry function: "e0".."e4", "psi", "sin_pi", "exp", "abs_half", "osc".
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn opgeom_function_registry(name: *const c_char, out: *mut *mut OpgeomFunction) -> OpgeomStatus {
    guard(|| {
        let f = Function01::registry(text(name, "name")?)?;
        put(out, Box::into_raw(Box::new(OpgeomFunction(f))), "out")
    })
}

struct Callback {
    cb: extern "C" fn(f64, *mut c_void) -> f64,
    data: *mut c_void,
}

impl Callback {
    fn call(&self, x: f64) -> f64 {
        (self.cb)(x, self.data)
    }
}

// the caller promises the callback may run on any thread
unsafe impl Send for Callback {}
unsafe impl Sync for Callback {}

/// A function evaluated through `cb(x, user_data)`. The callback may be
/// invoked from several threads at once and must stay valid until the
/// handle and everything derived from it are freed.
///
/// # Safety
/// `out` must be writable; `user_data` must satisfy the above.
#[no_mangle]
pub unsafe extern "C" fn opgeom_function_from_callback(
    cb: Option<extern "C" fn(x: f64, user_data: *mut c_void) -> f64>,
    user_data: *mut c_void,
    out: *mut *mut OpgeomFunction,
) -> OpgeomStatus {
    guard(|| {
        let cb = cb.ok_or(Fail::Null("cb"))?;
        let c = Callback { cb, data: user_data };
        let f = Function01::from_fn("callback", move |x| c.call(x));
        put(out, Box::into_raw(Box::new(OpgeomFunction(f))), "out")
    })
}

/// f − B₁f.
///
/// # Safety
/// `f` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn opgeom_function_project(f: *const OpgeomFunction, out: *mut *mut OpgeomFunction) -> OpgeomStatus {
    guard(|| {
        let g = project_to_cpsi(&get(f, "f")?.0);
        put(out, Box::into_raw(Box::new(OpgeomFunction(g))), "out")
    })
}

/// ψ·f.
///
/// # Safety
/// `f` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn opgeom_function_psi_times(f: *const OpgeomFunction, out: *mut *mut OpgeomFunction) -> OpgeomStatus {
    guard(|| {
        let g = Function01::psi_times(&get(f, "f")?.0);
        put(out, Box::into_raw(Box::new(OpgeomFunction(g))), "out")
    })
}

/// # Safety
/// `f` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn opgeom_function_eval(f: *const OpgeomFunction, x: f64, out: *mut f64) -> OpgeomStatus {
    guard(|| {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain(format!("x = {x} outside [0, 1]")).into());
        }
        put(out, get(f, "f")?.0.eval(x), "out")
    })
}

/// # Safety
/// `f` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn opgeom_function_free(f: *mut OpgeomFunction) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Grid estimate of ‖f‖_ψ = sup |f|/ψ over a Chebyshev grid (0 = default size).
///
/// # Safety
/// `f` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn opgeom_psi_norm(f: *const OpgeomFunction, grid_size: usize, out: *mut f64) -> OpgeomStatus {
    guard(|| {
        let v = psi_norm(&get(f, "f")?.0, &grid(grid_size)?)?.value;
        put(out, v, "out")
    })
}

/// G_L(f) = Σ L^k f for f in C_ψ. `eps` ≤ 0 selects the family default; it
/// is ignored by the solve path.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn opgeom_geometric_series(
    op: *const OpgeomOperator,
    f: *const OpgeomFunction,
    method: OpgeomMethod,
    eps: f64,
    grid_size: usize,
    out: *mut *mut OpgeomSeries,
) -> OpgeomStatus {
    guard(|| {
        let op = &get(op, "op")?.0;
        let f = &get(f, "f")?.0;
        let engine = SeriesEngine::new(op, &grid(grid_size)?)?;
        let eps = if eps > 0.0 { eps } else { default_eps(op.family) };
        let r = match method {
            OpgeomMethod::Neumann => engine.neumann(f, eps)?,
            OpgeomMethod::Solve => engine.solve(f)?,
        };
        put(out, Box::into_raw(Box::new(OpgeomSeries(r))), "out")
    })
}

/// G_L(f)(x) for any x in [0, 1].
///
/// # Safety
/// `s` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn opgeom_series_eval(s: *const OpgeomSeries, x: f64, out: *mut f64) -> OpgeomStatus {
    guard(|| {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain(format!("x = {x} outside [0, 1]")).into());
        }
        put(out, get(s, "series")?.0.g.eval(x), "out")
    })
}

/// # Safety
/// `s` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn opgeom_series_info(s: *const OpgeomSeries, out: *mut OpgeomSeriesInfo) -> OpgeomStatus {
    guard(|| {
        let r = &get(s, "series")?.0;
        let info = OpgeomSeriesInfo {
            terms_used: r.terms_used,
            tail_bound: r.tail_bound,
            truncation_bound: r.truncation_bound,
            residual_psi_norm: r.residual_psi_norm,
            b_norm: r.b_norm,
            f_psi_norm: r.f_psi_norm,
        };
        put(out, info, "out")
    })
}

/// Converts the series into a function handle (the series handle stays valid).
///
/// # Safety
/// `s` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn opgeom_series_function(s: *const OpgeomSeries, out: *mut *mut OpgeomFunction) -> OpgeomStatus {
    guard(|| {
        let g = get(s, "series")?.0.g.clone();
        put(out, Box::into_raw(Box::new(OpgeomFunction(g))), "out")
    })
}

/// # Safety
/// `s` must come from [`opgeom_geometric_series`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn opgeom_series_free(s: *mut OpgeomSeries) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// ‖(I − L)G f − f‖_ψ and ‖G(I − L)f − f‖_ψ.
///
/// # Safety
/// Handles must be live; `r7` and `r8` must be writable.
#[no_mangle]
pub unsafe extern "C" fn opgeom_inversion_residuals(
    op: *const OpgeomOperator,
    f: *const OpgeomFunction,
    eps: f64,
    grid_size: usize,
    r7: *mut f64,
    r8: *mut f64,
) -> OpgeomStatus {
    guard(|| {
        let op = &get(op, "op")?.0;
        let engine = SeriesEngine::new(op, &grid(grid_size)?)?;
        let eps = if eps > 0.0 { eps } else { default_eps(op.family) };
        let (a, b) = engine.inversion_residuals(&get(f, "f")?.0, eps)?;
        put(r7, a, "r7")?;
        put(r8, b, "r8")
    })
}
