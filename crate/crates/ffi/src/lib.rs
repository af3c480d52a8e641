//! C interface to `revkde`.
//!
//! Every function returns a [`RevkdeStatus`]; results go through out
//! pointers. On failure a message is kept per thread and can be read with
//! [`revkde_last_error`]. Handles are opaque and must be released with their
//! `_free` function. Panics are caught at the boundary and reported as
//! [`RevkdeStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use revkde::chains::{build_finite_chain, exact_lag_covariance, simulate_path, Chain, ChainSpec};
use revkde::clt_harness::{run_clt_experiment, CltConfig};
use revkde::dependence::{alpha_bar_coefficient, eta_coefficient};
use revkde::estimator::{bandwidth_regime_check, expected_kde, kde_evaluate, BandwidthSchedule, RegimeMode};
use revkde::kernels::Kernel;
use revkde::numerics::RngStream;
use revkde::Error;

/// Status codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RevkdeStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NotReversible = 3,
    RegimeViolated = 4,
    Numerical = 5,
    Io = 6,
    Panic = 7,
}

/// Bandwidth regime to check against.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RevkdeRegime {
    Theorem1 = 0,
    Corollary = 1,
}

/// Opaque chain handle.
pub struct RevkdeChain {
    inner: Chain,
}

/// Opaque kernel handle.
pub struct RevkdeKernel {
    inner: Kernel,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> RevkdeStatus {
    match e {
        Error::NotReversible { .. } | Error::Reducible => RevkdeStatus::NotReversible,
        Error::Regime(_) => RevkdeStatus::RegimeViolated,
        Error::QuadratureCap { .. } | Error::Eigen(_) => RevkdeStatus::Numerical,
        Error::Io(_) => RevkdeStatus::Io,
        _ => RevkdeStatus::InvalidArgument,
    }
}

struct Fail(RevkdeStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(RevkdeStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> RevkdeStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RevkdeStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            RevkdeStatus::Panic
        }
    }
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a>(p: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn chain_ref<'a>(p: *const RevkdeChain) -> Result<&'a Chain, Fail> {
    p.as_ref().map(|c| &c.inner).ok_or_else(|| null("chain"))
}

unsafe fn kernel_ref<'a>(p: *const RevkdeKernel) -> Result<&'a Kernel, Fail> {
    p.as_ref().map(|k| &k.inner).ok_or_else(|| null("kernel"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(RevkdeStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

/// Message for the last failed call on this thread, or NULL. Valid until the
/// next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn revkde_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version, static string.
#[no_mangle]
pub extern "C" fn revkde_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Finite reversible chain on `n_states` values with a row-major
/// `n_states x n_states` transition matrix.
///
/// # Safety
/// `values` must point to `n_states` doubles, `transition` to
/// `n_states * n_states` doubles, `out` to writable storage for a pointer.
#[no_mangle]
pub unsafe extern "C" fn revkde_chain_finite_new(
    values: *const f64,
    transition: *const f64,
    n_states: usize,
    out_chain: *mut *mut RevkdeChain,
) -> RevkdeStatus {
    guard(|| {
        let slot = out(out_chain, "out_chain")?;
        *slot = ptr::null_mut();
        let v = slice(values, n_states, "values")?.to_vec();
        let t = slice(transition, n_states * n_states, "transition")?;
        let rows = t.chunks(n_states.max(1)).map(<[f64]>::to_vec).collect();
        let chain = build_finite_chain(v, rows)?;
        *slot = Box::into_raw(Box::new(RevkdeChain {
            inner: Chain::Finite(chain),
        }));
        Ok(())
    })
}

/// Stationary Gaussian AR(1) with unit marginal variance.
///
/// # Safety
/// `out_chain` must point to writable storage for a pointer.
#[no_mangle]
pub unsafe extern "C" fn revkde_chain_ar1_new(rho: f64, out_chain: *mut *mut RevkdeChain) -> RevkdeStatus {
    guard(|| {
        let slot = out(out_chain, "out_chain")?;
        *slot = ptr::null_mut();
        let chain = ChainSpec::Ar1 { rho }.build()?;
        *slot = Box::into_raw(Box::new(RevkdeChain { inner: chain }));
        Ok(())
    })
}

/// # Safety
/// `chain` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn revkde_chain_free(chain: *mut RevkdeChain) {
    if !chain.is_null() {
        drop(Box::from_raw(chain));
    }
}

/// Fill `out_path[0..n]` with a stationary path drawn from stream
/// `(seed, stream)`.
///
/// # Safety
/// `chain` must be a live handle; `out_path` must hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn revkde_chain_simulate(
    chain: *const RevkdeChain,
    n: usize,
    seed: u64,
    stream: u64,
    out_path: *mut f64,
) -> RevkdeStatus {
    guard(|| {
        let c = chain_ref(chain)?;
        let dst = slice_mut(out_path, n, "out_path")?;
        let path = simulate_path(c, n, RngStream::new(seed, stream))?;
        dst.copy_from_slice(&path);
        Ok(())
    })
}

/// `cov(g(X_0), g(X_lag))` for a finite chain, `g` given per state and
/// centered under the stationary law.
///
/// # Safety
/// `chain` must be a live handle; `g` must hold `n_states` doubles.
#[no_mangle]
pub unsafe extern "C" fn revkde_chain_lag_covariance(
    chain: *const RevkdeChain,
    g: *const f64,
    n_states: usize,
    lag: usize,
    out_value: *mut f64,
) -> RevkdeStatus {
    guard(|| {
        let dst = out(out_value, "out_value")?;
        let Chain::Finite(c) = chain_ref(chain)? else {
            return Err(Fail(RevkdeStatus::InvalidArgument, "not a finite chain".into()));
        };
        *dst = exact_lag_covariance(c, slice(g, n_states, "g")?, lag)?;
        Ok(())
    })
}

/// Exact `eta_lag` and `alpha_bar_lag`.
///
/// # Safety
/// `chain` must be a live handle; out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn revkde_chain_dependence(
    chain: *const RevkdeChain,
    lag: usize,
    out_eta: *mut f64,
    out_alpha_bar: *mut f64,
) -> RevkdeStatus {
    guard(|| {
        let c = chain_ref(chain)?;
        let eta = out(out_eta, "out_eta")?;
        let ab = out(out_alpha_bar, "out_alpha_bar")?;
        *eta = eta_coefficient(c, lag)?;
        *ab = alpha_bar_coefficient(c, lag)?;
        Ok(())
    })
}

/// Kernel by name: `gaussian`, `epanechnikov` or `uniform`.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out_kernel` must be writable.
#[no_mangle]
pub unsafe extern "C" fn revkde_kernel_new(name: *const c_char, out_kernel: *mut *mut RevkdeKernel) -> RevkdeStatus {
    guard(|| {
        let slot = out(out_kernel, "out_kernel")?;
        *slot = ptr::null_mut();
        let k = Kernel::by_name(str_arg(name, "name")?)?;
        *slot = Box::into_raw(Box::new(RevkdeKernel { inner: k }));
        Ok(())
    })
}

/// # Safety
/// `kernel` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn revkde_kernel_free(kernel: *mut RevkdeKernel) {
    if !kernel.is_null() {
        drop(Box::from_raw(kernel));
    }
}

/// `K(u)`.
///
/// # Safety
/// `kernel` must be a live handle; `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn revkde_kernel_eval(kernel: *const RevkdeKernel, u: f64, out_value: *mut f64) -> RevkdeStatus {
    guard(|| {
        *out(out_value, "out_value")? = kernel_ref(kernel)?.eval(u);
        Ok(())
    })
}

/// Density estimate of `path` at `n_points` points.
///
/// # Safety
/// `path` must hold `n_path` doubles, `points` and `out_values` `n_points`.
#[no_mangle]
pub unsafe extern "C" fn revkde_kde_evaluate(
    kernel: *const RevkdeKernel,
    path: *const f64,
    n_path: usize,
    bandwidth: f64,
    points: *const f64,
    n_points: usize,
    out_values: *mut f64,
) -> RevkdeStatus {
    guard(|| {
        let k = kernel_ref(kernel)?;
        let est = kde_evaluate(
            slice(path, n_path, "path")?,
            k,
            bandwidth,
            slice(points, n_points, "points")?,
        )?;
        slice_mut(out_values, n_points, "out_values")?.copy_from_slice(&est.values);
        Ok(())
    })
}

/// Exact expectation of the estimator at `x` under the chain's marginal.
///
/// # Safety
/// Handles must be live; `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn revkde_expected_kde(
    chain: *const RevkdeChain,
    kernel: *const RevkdeKernel,
    bandwidth: f64,
    x: f64,
    out_value: *mut f64,
) -> RevkdeStatus {
    guard(|| {
        let dst = out(out_value, "out_value")?;
        *dst = expected_kde(&chain_ref(chain)?.marginal(), kernel_ref(kernel)?, bandwidth, x)?;
        Ok(())
    })
}

/// Check `b_n = c n^{-beta}` against the regime. A violation is reported as
/// `RegimeViolated` with the hypothesis in the error message.
#[no_mangle]
pub extern "C" fn revkde_regime_check(c: f64, beta: f64, regime: RevkdeRegime) -> RevkdeStatus {
    guard(|| {
        let s = BandwidthSchedule::new(c, beta)?;
        let mode = match regime {
            RevkdeRegime::Theorem1 => RegimeMode::Theorem1,
            RevkdeRegime::Corollary => RegimeMode::Corollary,
        };
        match bandwidth_regime_check(s, mode).violated {
            Some(h) => Err(Error::Regime(h).into()),
            None => Ok(()),
        }
    })
}

/// Run a Monte Carlo normality experiment described by a TOML document and
/// return its report as JSON. Free the string with [`revkde_string_free`].
///
/// # Safety
/// `config_toml` must be NUL-terminated; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn revkde_clt_run(
    config_toml: *const c_char,
    workers: usize,
    out_pass: *mut bool,
    out_json: *mut *mut c_char,
) -> RevkdeStatus {
    guard(|| {
        let slot = out(out_json, "out_json")?;
        *slot = ptr::null_mut();
        let pass = out(out_pass, "out_pass")?;
        let cfg: CltConfig = toml::from_str(str_arg(config_toml, "config_toml")?)
            .map_err(|e| Fail(RevkdeStatus::InvalidArgument, format!("config: {e}")))?;
        let run = run_clt_experiment(&cfg, workers)?;
        let json = serde_json::to_string(&run.report).expect("report serializes");
        *pass = run.report.pass();
        *slot = CString::new(json).expect("json has no NUL").into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must be NULL or a string returned by this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn revkde_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
