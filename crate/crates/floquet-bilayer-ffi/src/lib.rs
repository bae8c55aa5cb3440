//! C ABI over the floquet-bilayer solver.
//!
//! Conventions: every function returns an [`FbStatus`] code (0 = ok);
//! results come back through out-pointers; solutions are opaque handles
//! released with [`fb_solution_free`]; complex numbers travel as
//! interleaved (re, im) doubles. [`fb_last_error`] returns a
//! thread-local message for the most recent failure.

use floquet_bilayer::{
    validate_config, DimensionlessParams, Error, FloquetSolution, SolveOptions, Tolerances,
};
use num_complex::Complex64 as C64;
use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let sanitized: String = msg
        .chars()
        .map(|c| if c == '\0' { ' ' } else { c })
        .collect();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

/// Status codes shared by every entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FbStatus {
    Ok = 0,
    /// Null pointer, bad length, or invalid parameter value.
    InvalidArgument = 1,
    /// A required sideband has an imaginary wavenumber.
    Inadmissible = 2,
    /// A matching matrix is singular (marginal or degenerate setup).
    Degenerate = 3,
    /// Evaluation outside the layer's z-domain.
    Domain = 4,
    /// Internal failure; see fb_last_error.
    Internal = 5,
}

fn status_of(err: &Error) -> FbStatus {
    match err {
        Error::InvalidParameter { .. }
        | Error::FreeConstantCount { .. }
        | Error::Config(_)
        | Error::DegenerateCoupling(_) => FbStatus::InvalidArgument,
        Error::EvanescentMode { .. } => FbStatus::Inadmissible,
        Error::SingularSeed(_)
        | Error::DegenerateTerminal(_)
        | Error::DegenerateDeterminant { .. }
        | Error::SingularMatrix(_) => FbStatus::Degenerate,
        Error::Domain(_) => FbStatus::Domain,
        _ => FbStatus::Internal,
    }
}

/// Model parameters in dimensionless units.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FbParams {
    pub omega: f64,
    pub j1: f64,
    pub eps_xy: f64,
    pub quasi_energy: f64,
    pub u0: f64,
    pub alpha_kx: f64,
    pub beta_ky: f64,
    pub b: f64,
    pub m_base: i64,
    pub n_len: u32,
}

impl From<&FbParams> for DimensionlessParams {
    fn from(p: &FbParams) -> DimensionlessParams {
        DimensionlessParams {
            omega: p.omega,
            j1: p.j1,
            eps_xy: p.eps_xy,
            quasi_energy: p.quasi_energy,
            u0: p.u0,
            alpha_kx: p.alpha_kx,
            beta_ky: p.beta_ky,
            b: p.b,
            m_base: p.m_base,
            n_len: p.n_len as usize,
        }
    }
}

/// Headline verification figures for one solution.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FbVerifySummary {
    pub residual_algebraic: f64,
    pub continuity_value: f64,
    pub continuity_deriv: f64,
    pub boundary_value: f64,
    /// 1 when every figure is within the default tolerances.
    pub pass: i32,
}

/// Opaque solution handle.
pub struct FbSolution {
    inner: FloquetSolution,
}

fn guard<F: FnOnce() -> FbStatus>(f: F) -> FbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            FbStatus::Internal
        }
    }
}

/// Check whether every required sideband carries a real wavenumber.
/// `accept` receives 1/0; on rejection `bad_index` gets the first
/// offending sideband index.
///
/// # Safety
/// `params` must be valid; out-pointers may be null to skip them.
#[no_mangle]
pub unsafe extern "C" fn fb_admissible(
    params: *const FbParams,
    accept: *mut i32,
    bad_index: *mut i64,
) -> FbStatus {
    guard(|| {
        if params.is_null() {
            set_error("params is null");
            return FbStatus::InvalidArgument;
        }
        let p: DimensionlessParams = (&*params).into();
        match validate_config(&p) {
            Ok(report) => {
                if !accept.is_null() {
                    *accept = report.accept as i32;
                }
                if let (false, Some((index, _))) = (report.accept, report.first_rejected) {
                    if !bad_index.is_null() {
                        *bad_index = index;
                    }
                }
                FbStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                status_of(&e)
            }
        }
    })
}

/// Construct a solution from `free_len` complex free constants supplied
/// as interleaved (re, im) doubles; `free_len` must equal `2 * n_len`.
/// On success `*out` owns the handle.
///
/// # Safety
/// `free_re_im` must point to `2 * free_len` doubles; `out` must be a
/// valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fb_solve(
    params: *const FbParams,
    free_re_im: *const f64,
    free_len: usize,
    out: *mut *mut FbSolution,
) -> FbStatus {
    guard(|| {
        if params.is_null() || out.is_null() || (free_re_im.is_null() && free_len > 0) {
            set_error("null argument");
            return FbStatus::InvalidArgument;
        }
        let p: DimensionlessParams = (&*params).into();
        let free: Vec<C64> = (0..free_len)
            .map(|i| C64::new(*free_re_im.add(2 * i), *free_re_im.add(2 * i + 1)))
            .collect();
        match FloquetSolution::construct(p, &free, SolveOptions::default()) {
            Ok(sol) => {
                *out = Box::into_raw(Box::new(FbSolution { inner: sol }));
                FbStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                status_of(&e)
            }
        }
    })
}

/// Release a handle produced by `fb_solve`. Null is a no-op.
///
/// # Safety
/// `sol` must be null or a pointer returned by `fb_solve`.
#[no_mangle]
pub unsafe extern "C" fn fb_solution_free(sol: *mut FbSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

unsafe fn eval_common(
    sol: *const FbSolution,
    z: f64,
    t: f64,
    out_spinor: *mut f64,
    derivative: bool,
) -> FbStatus {
    if sol.is_null() || out_spinor.is_null() {
        set_error("null argument");
        return FbStatus::InvalidArgument;
    }
    let s = &(*sol).inner;
    let result = if derivative {
        let side = if z <= 0.0 {
            floquet_bilayer::Side::Left
        } else {
            floquet_bilayer::Side::Right
        };
        s.eval_dz(z, t, side)
    } else {
        s.eval(z, t)
    };
    match result {
        Ok(v) => {
            *out_spinor.add(0) = v.up.re;
            *out_spinor.add(1) = v.up.im;
            *out_spinor.add(2) = v.down.re;
            *out_spinor.add(3) = v.down.im;
            FbStatus::Ok
        }
        Err(e) => {
            set_error(&e.to_string());
            status_of(&e)
        }
    }
}

/// Evaluate the spinor field at (z, t); `out_spinor` receives
/// (re_up, im_up, re_down, im_down). z <= 0 addresses the left layer,
/// z in (0, b] the right one.
///
/// # Safety
/// `out_spinor` must point to 4 doubles.
#[no_mangle]
pub unsafe extern "C" fn fb_eval(
    sol: *const FbSolution,
    z: f64,
    t: f64,
    out_spinor: *mut f64,
) -> FbStatus {
    guard(|| eval_common(sol, z, t, out_spinor, false))
}

/// Evaluate the z-derivative of the spinor field at (z, t).
///
/// # Safety
/// As `fb_eval`.
#[no_mangle]
pub unsafe extern "C" fn fb_eval_dz(
    sol: *const FbSolution,
    z: f64,
    t: f64,
    out_spinor: *mut f64,
) -> FbStatus {
    guard(|| eval_common(sol, z, t, out_spinor, true))
}

/// Largest coefficient magnitude of the solution (the scale used by
/// relative tolerances). Returns 0 for a null handle.
///
/// # Safety
/// `sol` must be null or a valid handle.
#[no_mangle]
pub unsafe extern "C" fn fb_solution_scale(sol: *const FbSolution) -> f64 {
    if sol.is_null() {
        return 0.0;
    }
    (*sol).inner.scale()
}

/// Run the exact per-mode residual and the matching report, filling the
/// summary.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fb_verify(sol: *const FbSolution, out: *mut FbVerifySummary) -> FbStatus {
    guard(|| {
        if sol.is_null() || out.is_null() {
            set_error("null argument");
            return FbStatus::InvalidArgument;
        }
        let s = &(*sol).inner;
        let tol = Tolerances::default();
        let algebraic = floquet_bilayer::residual_algebraic(s);
        match floquet_bilayer::matching_report(s, 64, &tol) {
            Ok(m) => {
                let cv = m.continuity_value.unwrap_or(0.0);
                let cd = m.continuity_deriv.unwrap_or(0.0);
                let bv = m.boundary_value.unwrap_or(0.0);
                *out = FbVerifySummary {
                    residual_algebraic: algebraic,
                    continuity_value: cv,
                    continuity_deriv: cd,
                    boundary_value: bv,
                    pass: (algebraic <= tol.algebraic
                        && cv <= tol.matching
                        && cd <= tol.matching
                        && bv <= tol.matching) as i32,
                };
                FbStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                status_of(&e)
            }
        }
    })
}

/// Serialize the solution's coefficient table as a JSON document (the
/// same schema the CLI writes). The returned string is owned by the
/// caller and must be released with `fb_string_free`. Returns null on
/// failure.
///
/// # Safety
/// `sol` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn fb_coefficients_json(sol: *const FbSolution) -> *mut c_char {
    if sol.is_null() {
        set_error("null argument");
        return std::ptr::null_mut();
    }
    let s = &(*sol).inner;
    let file = floquet_bilayer::config::CoefficientFile::from_table(&s.params, &s.coeffs);
    match serde_json::to_string_pretty(&file) {
        Ok(text) => match CString::new(text) {
            Ok(cstr) => cstr.into_raw(),
            Err(_) => {
                set_error("embedded NUL in JSON");
                std::ptr::null_mut()
            }
        },
        Err(e) => {
            set_error(&e.to_string());
            std::ptr::null_mut()
        }
    }
}

/// Release a string returned by `fb_coefficients_json`.
///
/// # Safety
/// `text` must be null or a pointer returned by this library.
#[no_mangle]
pub unsafe extern "C" fn fb_string_free(text: *mut c_char) {
    if !text.is_null() {
        drop(CString::from_raw(text));
    }
}

/// Message for the most recent failure on this thread. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn fb_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}
