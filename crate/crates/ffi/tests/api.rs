use std::ffi::{CStr, CString};
use std::ptr;

use dshock_ffi::*;

fn last_error() -> String {
    let p = dshock_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn riemann_roundtrip() {
    let mut h = ptr::null_mut();
    assert_eq!(dshock_riemann_solve(4.0, 1.0, 1.0, -1.0, 0.0, 0.0, 0.0, &mut h), DshockStatus::Ok);
    assert!(dshock_last_error().is_null());
    let mut s = DshockFrontSample::default();
    unsafe {
        assert_eq!(dshock_riemann_eval(h, 1.5, &mut s), DshockStatus::Ok);
        assert!((s.u_delta - 1.0 / 3.0).abs() < 1e-15 && (s.e - 6.0).abs() < 1e-13 && (s.phi - 0.5).abs() < 1e-15);
        let mut constant = false;
        assert_eq!(dshock_riemann_is_constant_speed(h, &mut constant), DshockStatus::Ok);
        assert!(constant);
        let mut rate = 0.0;
        assert_eq!(dshock_riemann_dissipation(h, 0.5, &mut rate), DshockStatus::Ok);
        assert!((rate - 48.0 / 27.0).abs() < 1e-14);
        assert_eq!(dshock_riemann_eval(h, -1.0, &mut s), DshockStatus::InvalidArgument);
        assert!(!last_error().is_empty());
        dshock_riemann_free(h);
        dshock_riemann_free(ptr::null_mut());
    }
}

#[test]
fn error_codes() {
    let mut h = ptr::null_mut();
    assert_eq!(dshock_riemann_solve(1.0, -1.0, 1.0, 1.0, 0.0, 0.0, 0.0, &mut h), DshockStatus::NoDeltaShock);
    assert!(h.is_null());
    assert!(last_error().contains("entropy"));
    assert_eq!(dshock_riemann_solve(-1.0, 1.0, 1.0, -1.0, 0.0, 0.0, 0.0, &mut h), DshockStatus::InvalidArgument);
    assert_eq!(dshock_riemann_solve(1.0, 1.0, 1.0, -1.0, 0.0, 0.0, 0.0, ptr::null_mut()), DshockStatus::NullPointer);
    let mut s = DshockFrontSample::default();
    assert_eq!(unsafe { dshock_riemann_eval(ptr::null(), 0.0, &mut s) }, DshockStatus::NullPointer);
    let mut b = true;
    assert_eq!(dshock_classical_shock_feasible(1.0, 1.0, 1.0, -1.0, &mut b), DshockStatus::Ok);
    assert!(!b);
    assert_eq!(dshock_classical_shock_feasible(1.0, 0.5, 2.0, 0.5, &mut b), DshockStatus::Ok);
    assert!(b);
}

#[test]
fn relativistic_flux_selected_by_c0() {
    let mut h = ptr::null_mut();
    assert_eq!(dshock_riemann_solve(4.0, 1.0, 1.0, -1.0, 1.0, 0.0, 0.0, &mut h), DshockStatus::Ok);
    let mut s = DshockFrontSample::default();
    assert_eq!(unsafe { dshock_riemann_eval(h, 1.0, &mut s) }, DshockStatus::Ok);
    assert!((s.u_delta - 0.27513413243116425).abs() < 1e-14);
    unsafe { dshock_riemann_free(h) };
}

#[test]
fn scenario_run() {
    let dir = tempfile::tempdir().unwrap();
    let json =
        CString::new(r#"{"name": "sym", "problem": {"kind": "riemann1d", "rho_l": 1, "u_l": 1, "rho_r": 1, "u_r": -1, "t_end": 1}}"#)
            .unwrap();
    let out = CString::new(dir.path().to_str().unwrap()).unwrap();
    let mut h = ptr::null_mut();
    unsafe {
        assert_eq!(dshock_scenario_new(json.as_ptr(), &mut h), DshockStatus::Ok);
        let mut code = -1;
        assert_eq!(dshock_scenario_run(h, out.as_ptr(), false, &mut code), DshockStatus::Ok);
        assert_eq!(code, 0);
        assert!(dir.path().join("manifest.json").exists());
        dshock_scenario_free(h);
        let bad = CString::new("{\"name\": 1}").unwrap();
        assert_eq!(dshock_scenario_new(bad.as_ptr(), &mut h), DshockStatus::Schema);
        assert!(h.is_null());
        assert_eq!(dshock_scenario_new(ptr::null(), &mut h), DshockStatus::NullPointer);
    }
}

#[test]
fn version_is_static() {
    let v = unsafe { CStr::from_ptr(dshock_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
