//! C ABI for the `ietidp` solver.
//!
//! Objects are opaque handles created by `ieti_*_new`/`ieti_*_from_*`
//! functions and released with the matching `*_free`. Every fallible call
//! returns an [`IetiStatus`]; on failure a message is available from
//! [`ieti_last_error`] on the same thread until the next failing call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ietidp::assembly::Problem;
use ietidp::experiment::{Builtin, DomainConfig};
use ietidp::geometry::MultiPatchDomain;
use ietidp::ieti::{solve, SolveOptions, SolveReport};
use ietidp::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IetiStatus {
    Ok = 0,
    NullPointer = 1,
    /// Malformed input: unknown builtin, bad JSON, invalid option values.
    InvalidInput = 2,
    /// Factorization or iteration failure.
    Numerical = 3,
    /// The requested value does not exist (e.g. κ̂ of an unconverged solve).
    NotAvailable = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

/// A discretized multi-patch domain.
pub struct IetiDomain {
    domain: MultiPatchDomain,
    name: String,
    refinement: usize,
}

/// Result of one solve.
pub struct IetiReport {
    report: SolveReport,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct IetiSolveOptions {
    /// Penalty parameter.
    pub delta: f64,
    /// Relative residual reduction of PCG.
    pub tol: f64,
    pub max_iter: usize,
    /// Constant right-hand side.
    pub source: f64,
    pub check_oracle: bool,
    pub keep_solution: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> IetiStatus {
    if e.is_config() {
        IetiStatus::InvalidInput
    } else {
        IetiStatus::Numerical
    }
}

/// Runs `f`, converting errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), (IetiStatus, String)>) -> IetiStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => IetiStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside ietidp".into());
            IetiStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (IetiStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (IetiStatus, String) {
    (IetiStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (IetiStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (IetiStatus::InvalidInput, format!("{what} is not UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (IetiStatus, String)> {
    p.as_mut().ok_or_else(|| null(what))
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ieti_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn ieti_solve_options_default() -> IetiSolveOptions {
    let d = SolveOptions::default();
    IetiSolveOptions {
        delta: 12.0,
        tol: d.tol,
        max_iter: d.max_iter,
        source: 1.0,
        check_oracle: false,
        keep_solution: false,
    }
}

fn new_domain(domain: MultiPatchDomain, name: String, refinement: usize, out: &mut *mut IetiDomain) {
    *out = Box::into_raw(Box::new(IetiDomain {
        domain,
        name,
        refinement,
    }));
}

/// Builds a builtin domain. `name` is `grid:N`, `tdomain`, `slider:M:S` or
/// `twopatch`.
///
/// # Safety
/// `name` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ieti_domain_from_builtin(
    name: *const c_char,
    degree: usize,
    refinement: usize,
    out: *mut *mut IetiDomain,
) -> IetiStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let b: Builtin = str_arg(name, "name")?.parse().map_err(lib_err)?;
        let d = b.build(degree, refinement).map_err(lib_err)?;
        new_domain(d, b.to_string(), refinement, out);
        Ok(())
    })
}

/// Builds a domain from a JSON description.
///
/// # Safety
/// `json` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ieti_domain_from_json(
    json: *const c_char,
    degree: usize,
    refinement: usize,
    out: *mut *mut IetiDomain,
) -> IetiStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let cfg = DomainConfig::from_json(str_arg(json, "json")?).map_err(lib_err)?;
        let d = cfg.build(degree, refinement).map_err(lib_err)?;
        new_domain(d, cfg.name.unwrap_or_else(|| "config".into()), refinement, out);
        Ok(())
    })
}

/// # Safety
/// `domain` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ieti_domain_free(domain: *mut IetiDomain) {
    if !domain.is_null() {
        drop(Box::from_raw(domain));
    }
}

/// # Safety
/// `domain` must be a valid handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ieti_domain_num_patches(domain: *const IetiDomain, out: *mut usize) -> IetiStatus {
    guard(|| {
        let d = domain.as_ref().ok_or_else(|| null("domain"))?;
        *out_arg(out, "out")? = d.domain.num_patches();
        Ok(())
    })
}

/// # Safety
/// `domain` must be a valid handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ieti_domain_num_dofs(domain: *const IetiDomain, out: *mut usize) -> IetiStatus {
    guard(|| {
        let d = domain.as_ref().ok_or_else(|| null("domain"))?;
        *out_arg(out, "out")? = d.domain.num_dofs();
        Ok(())
    })
}

/// Replaces the patch coefficients; `len` must equal the number of patches.
///
/// # Safety
/// `domain` must be a valid handle and `alphas` point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ieti_domain_set_alphas(domain: *mut IetiDomain, alphas: *const f64, len: usize) -> IetiStatus {
    guard(|| {
        let d = domain.as_mut().ok_or_else(|| null("domain"))?;
        if alphas.is_null() {
            return Err(null("alphas"));
        }
        let a = std::slice::from_raw_parts(alphas, len);
        d.domain = d.domain.with_alphas(a).map_err(lib_err)?;
        Ok(())
    })
}

/// Solves with the IETI-DP method. `options` may be null for defaults.
///
/// # Safety
/// `domain` must be a valid handle, `options` null or valid, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn ieti_solve(
    domain: *const IetiDomain,
    options: *const IetiSolveOptions,
    out: *mut *mut IetiReport,
) -> IetiStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let d = domain.as_ref().ok_or_else(|| null("domain"))?;
        let o = options.as_ref().copied().unwrap_or_else(|| ieti_solve_options_default());
        let opts = SolveOptions {
            tol: o.tol,
            max_iter: o.max_iter,
            check_oracle: o.check_oracle,
            keep_solution: o.keep_solution,
            ..SolveOptions::default()
        };
        if !(o.delta.is_finite() && o.delta > 0.0) {
            return Err((IetiStatus::InvalidInput, format!("penalty {} must be positive", o.delta)));
        }
        let problem = Problem::constant_source(o.delta, o.source);
        let report = solve(&d.domain, &problem, &d.name, d.refinement, &opts).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(IetiReport { report }));
        Ok(())
    })
}

/// # Safety
/// `report` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ieti_report_free(report: *mut IetiReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// # Safety
/// `report` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn ieti_report_iterations(report: *const IetiReport) -> usize {
    report.as_ref().map_or(0, |r| r.report.iterations)
}

/// # Safety
/// `report` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn ieti_report_converged(report: *const IetiReport) -> bool {
    report.as_ref().is_some_and(|r| r.report.converged)
}

/// # Safety
/// `report` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn ieti_report_multipliers(report: *const IetiReport) -> usize {
    report.as_ref().map_or(0, |r| r.report.multipliers)
}

unsafe fn optional(report: *const IetiReport, out: *mut f64, get: fn(&SolveReport) -> Option<f64>, what: &str) -> IetiStatus {
    guard(|| {
        let r = report.as_ref().ok_or_else(|| null("report"))?;
        let v = get(&r.report).ok_or_else(|| (IetiStatus::NotAvailable, format!("{what} not available")))?;
        *out_arg(out, "out")? = v;
        Ok(())
    })
}

/// Lanczos condition estimate; `NotAvailable` if PCG did not converge.
///
/// # Safety
/// `report` must be a valid handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ieti_report_kappa(report: *const IetiReport, out: *mut f64) -> IetiStatus {
    optional(report, out, |r| r.kappa, "condition estimate")
}

/// Relative ∞-norm difference to the direct solve; `NotAvailable` unless
/// the solve ran with `check_oracle`.
///
/// # Safety
/// `report` must be a valid handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ieti_report_oracle_error(report: *const IetiReport, out: *mut f64) -> IetiStatus {
    optional(report, out, |r| r.oracle_error, "oracle error")
}

/// Copies the patch coefficients into `buf`. With `buf` null only the
/// length is written to `len_out`.
///
/// # Safety
/// `report` must be a valid handle, `buf` null or valid for `capacity`
/// doubles, `len_out` valid.
#[no_mangle]
pub unsafe extern "C" fn ieti_report_solution(
    report: *const IetiReport,
    buf: *mut f64,
    capacity: usize,
    len_out: *mut usize,
) -> IetiStatus {
    guard(|| {
        let r = report.as_ref().ok_or_else(|| null("report"))?;
        let sol = &r.report.solution;
        if sol.is_empty() {
            return Err((IetiStatus::NotAvailable, "solve ran without keep_solution".into()));
        }
        *out_arg(len_out, "len_out")? = sol.len();
        if buf.is_null() {
            return Ok(());
        }
        if capacity < sol.len() {
            return Err((IetiStatus::BufferTooSmall, format!("need {} doubles, got {capacity}", sol.len())));
        }
        std::slice::from_raw_parts_mut(buf, sol.len()).copy_from_slice(sol);
        Ok(())
    })
}

/// The full report as JSON. Release with [`ieti_string_free`].
///
/// # Safety
/// `report` must be a valid handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ieti_report_to_json(report: *const IetiReport, out: *mut *mut c_char) -> IetiStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let r = report.as_ref().ok_or_else(|| null("report"))?;
        let text = serde_json::to_string(&r.report).map_err(|e| (IetiStatus::Numerical, e.to_string()))?;
        *out = CString::new(text).expect("json has no nul").into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ieti_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
