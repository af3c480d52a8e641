use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::ptr;

use revkde_ffi::*;

fn last_error() -> String {
    let p = revkde_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn two_state() -> *mut RevkdeChain {
    let values = [0.0, 1.0];
    let p = [0.8, 0.2, 0.3, 0.7];
    let mut chain = ptr::null_mut();
    let s = unsafe { revkde_chain_finite_new(values.as_ptr(), p.as_ptr(), 2, &mut chain) };
    assert_eq!(s, RevkdeStatus::Ok);
    assert!(!chain.is_null());
    chain
}

fn gaussian() -> *mut RevkdeKernel {
    let name = CString::new("gaussian").unwrap();
    let mut k = ptr::null_mut();
    assert_eq!(unsafe { revkde_kernel_new(name.as_ptr(), &mut k) }, RevkdeStatus::Ok);
    k
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(revkde_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn finite_chain_lag_covariance() {
    let chain = two_state();
    // pi = (0.6, 0.4), g centered, cov_k = var * 0.5^k
    let g = [-0.4, 0.6];
    let mut v = 0.0;
    let s = unsafe { revkde_chain_lag_covariance(chain, g.as_ptr(), 2, 3, &mut v) };
    assert_eq!(s, RevkdeStatus::Ok);
    assert!((v - 0.24 * 0.125).abs() < 1e-12, "{v}");
    unsafe { revkde_chain_free(chain) };
}

#[test]
fn cyclic_chain_is_rejected() {
    let values = [0.0, 1.0, 2.0];
    let p = [0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0];
    let mut chain = ptr::null_mut();
    let s = unsafe { revkde_chain_finite_new(values.as_ptr(), p.as_ptr(), 3, &mut chain) };
    assert_eq!(s, RevkdeStatus::NotReversible);
    assert!(chain.is_null());
    assert!(last_error().contains("reversible"), "{}", last_error());
}

#[test]
fn null_pointers_reported() {
    let mut v = 0.0;
    let s = unsafe { revkde_chain_lag_covariance(ptr::null(), ptr::null(), 0, 1, &mut v) };
    assert_eq!(s, RevkdeStatus::NullPointer);
    let s = unsafe { revkde_chain_ar1_new(0.5, ptr::null_mut()) };
    assert_eq!(s, RevkdeStatus::NullPointer);
    let k = gaussian();
    let s = unsafe { revkde_kernel_eval(k, 0.0, ptr::null_mut()) };
    assert_eq!(s, RevkdeStatus::NullPointer);
    unsafe {
        revkde_kernel_free(k);
        revkde_kernel_free(ptr::null_mut());
        revkde_chain_free(ptr::null_mut());
        revkde_string_free(ptr::null_mut());
    }
}

#[test]
fn error_cleared_on_success() {
    let mut chain = ptr::null_mut();
    assert_eq!(
        unsafe { revkde_chain_ar1_new(1.5, &mut chain) },
        RevkdeStatus::InvalidArgument
    );
    assert!(!revkde_last_error().is_null());
    assert_eq!(unsafe { revkde_chain_ar1_new(0.5, &mut chain) }, RevkdeStatus::Ok);
    assert!(revkde_last_error().is_null());
    unsafe { revkde_chain_free(chain) };
}

#[test]
fn unknown_kernel() {
    let name = CString::new("triangle").unwrap();
    let mut k = ptr::null_mut();
    assert_eq!(
        unsafe { revkde_kernel_new(name.as_ptr(), &mut k) },
        RevkdeStatus::InvalidArgument
    );
    assert!(k.is_null());
}

#[test]
fn kernel_and_kde() {
    let k = gaussian();
    let mut v = 0.0;
    assert_eq!(unsafe { revkde_kernel_eval(k, 0.0, &mut v) }, RevkdeStatus::Ok);
    assert!((v - 1.0 / (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-15);

    let path = [0.0, 0.0, 0.0];
    let points = [0.0, 1.0];
    let mut out = [0.0; 2];
    let s = unsafe { revkde_kde_evaluate(k, path.as_ptr(), 3, 0.5, points.as_ptr(), 2, out.as_mut_ptr()) };
    assert_eq!(s, RevkdeStatus::Ok);
    // every observation at 0: f(x) = K(x / b) / b
    let phi = |u: f64| (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt();
    assert!((out[0] - phi(0.0) / 0.5).abs() < 1e-14);
    assert!((out[1] - phi(2.0) / 0.5).abs() < 1e-14);
    unsafe { revkde_kernel_free(k) };
}

#[test]
fn expected_kde_gaussian_closed_form() {
    let mut chain = ptr::null_mut();
    assert_eq!(unsafe { revkde_chain_ar1_new(0.5, &mut chain) }, RevkdeStatus::Ok);
    let k = gaussian();
    let mut v = 0.0;
    assert_eq!(
        unsafe { revkde_expected_kde(chain, k, 0.5, 0.0, &mut v) },
        RevkdeStatus::Ok
    );
    // N(0, 1 + b^2) density at 0
    assert!((v - 1.0 / (2.0 * std::f64::consts::PI * 1.25).sqrt()).abs() < 1e-12);
    unsafe {
        revkde_kernel_free(k);
        revkde_chain_free(chain);
    }
}

#[test]
fn simulate_is_reproducible() {
    let chain = two_state();
    let mut a = [0.0; 64];
    let mut b = [0.0; 64];
    unsafe {
        assert_eq!(revkde_chain_simulate(chain, 64, 9, 1, a.as_mut_ptr()), RevkdeStatus::Ok);
        assert_eq!(revkde_chain_simulate(chain, 64, 9, 1, b.as_mut_ptr()), RevkdeStatus::Ok);
        revkde_chain_free(chain);
    }
    assert_eq!(a, b);
    assert!(a.iter().all(|x| *x == 0.0 || *x == 1.0));
}

#[test]
fn dependence_of_ar1() {
    let mut chain = ptr::null_mut();
    assert_eq!(unsafe { revkde_chain_ar1_new(0.6, &mut chain) }, RevkdeStatus::Ok);
    let (mut eta, mut ab) = (0.0, 0.0);
    assert_eq!(
        unsafe { revkde_chain_dependence(chain, 2, &mut eta, &mut ab) },
        RevkdeStatus::Ok
    );
    // eta_k equals cov(X_0, X_k) for positively dependent Gaussian pairs
    assert!((eta - 0.36).abs() < 5e-4, "{eta}");
    // 2 sup |H| at the origin: 2 (arcsin(r) / (2 pi))
    assert!((ab - 0.36f64.asin() / std::f64::consts::PI).abs() < 1e-6, "{ab}");
    unsafe { revkde_chain_free(chain) };
}

#[test]
fn regime_codes() {
    assert_eq!(revkde_regime_check(1.0, 0.22, RevkdeRegime::Theorem1), RevkdeStatus::Ok);
    assert_eq!(
        revkde_regime_check(1.0, 0.22, RevkdeRegime::Corollary),
        RevkdeStatus::Ok
    );
    assert_eq!(
        revkde_regime_check(1.0, 0.19, RevkdeRegime::Corollary),
        RevkdeStatus::RegimeViolated
    );
    assert!(last_error().contains("nb_n^5 -> 0"));
    assert_eq!(
        revkde_regime_check(1.0, 0.25, RevkdeRegime::Theorem1),
        RevkdeStatus::RegimeViolated
    );
    assert!(last_error().contains("nb_n^4 -> infinity"));
    assert_eq!(
        revkde_regime_check(-1.0, 0.22, RevkdeRegime::Theorem1),
        RevkdeStatus::InvalidArgument
    );
}

#[test]
fn clt_run_returns_json() {
    let cfg = CString::new(
        r#"
points = [0.0]
n = 500
replicates = 120
seed = 5
[chain]
kind = "ar1"
rho = 0.2
[schedule]
c = 1.0
beta = 0.22
"#,
    )
    .unwrap();
    let mut json = ptr::null_mut();
    let mut pass = false;
    let s = unsafe { revkde_clt_run(cfg.as_ptr(), 2, &mut pass, &mut json) };
    assert_eq!(s, RevkdeStatus::Ok, "{}", last_error());
    let text = unsafe { CStr::from_ptr(json) }.to_str().unwrap().to_string();
    unsafe { revkde_string_free(json) };
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["replicates"], 120);
    assert_eq!(v["diagnostics"]["pass"]["all"].as_bool(), Some(pass));

    let bad = CString::new("points = [0.0]\nbogus = 1\n").unwrap();
    let s = unsafe { revkde_clt_run(bad.as_ptr(), 1, &mut pass, &mut json) };
    assert_eq!(s, RevkdeStatus::InvalidArgument);
    assert!(json.is_null());
}

#[test]
fn header_declares_every_export() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = std::fs::read_to_string(dir.join("include/revkde.h")).unwrap();
    let src = std::fs::read_to_string(dir.join("src/lib.rs")).unwrap();
    let exported: Vec<&str> = src
        .split("extern \"C\" fn ")
        .skip(1)
        .map(|s| s.split('(').next().unwrap())
        .collect();
    assert!(exported.len() >= 14);
    for name in exported {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
    for code in [
        "REVKDE_STATUS_OK = 0",
        "REVKDE_STATUS_PANIC = 7",
        "typedef struct RevkdeChain RevkdeChain",
    ] {
        assert!(header.contains(code), "{code}");
    }
}

#[test]
fn header_compiles_as_c() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let Ok(cc) = std::process::Command::new("cc").arg("--version").output() else {
        eprintln!("no C compiler, skipping");
        return;
    };
    assert!(cc.status.success());
    let status = std::process::Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-x", "c"])
        .arg(dir.join("include/revkde.h"))
        .status()
        .unwrap();
    assert!(status.success());
}
