//! C ABI over the `dshock` library.
//!
//! Every function returns a [`DshockStatus`]; on failure the message is
//! available from [`dshock_last_error`] on the same thread. Handles are
//! opaque, created by `*_new`/`*_solve` functions and released by the
//! matching `*_free`. Passing a null handle to a `*_free` function is a no-op.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use dshock::balance::energy_dissipation_rate;
use dshock::rh::{FrontState, SideStates};
use dshock::riemann1d::{classical_shock_feasible, solve_constant_states, DeltaShockPath1D, RiemannData1D};
use dshock::scenario::{run, RunOptions, Scenario};
use dshock::{relativistic_flux, standard_flux, Error};

/// Result of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DshockStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Schema = 3,
    NoDeltaShock = 4,
    Numerical = 5,
    Io = 6,
    Panic = 7,
}

impl From<&Error> for DshockStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Schema(_) | Error::Expression(_) => DshockStatus::Schema,
            Error::Io(_) => DshockStatus::Io,
            Error::NoDeltaShock(_) => DshockStatus::NoDeltaShock,
            Error::InvalidDimension(_)
            | Error::InvalidParameter(_)
            | Error::DimensionMismatch { .. }
            | Error::NonFinite(_)
            | Error::InvalidBattery(_) => DshockStatus::InvalidArgument,
            _ => DshockStatus::Numerical,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: DshockStatus, msg: impl Into<String>) -> DshockStatus {
    set_error(msg.into());
    status
}

/// Runs `f`, converting errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), DshockStatus>) -> DshockStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DshockStatus::Ok,
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(DshockStatus::Panic, format!("internal panic: {msg}"))
        }
    }
}

fn lib<T>(r: dshock::Result<T>) -> Result<T, DshockStatus> {
    r.map_err(|e| fail(DshockStatus::from(&e), e.to_string()))
}

fn out_ptr<'a, T>(p: *mut T) -> Result<&'a mut T, DshockStatus> {
    // SAFETY: the caller passes either null or a valid, writable pointer.
    unsafe { p.as_mut() }.ok_or_else(|| fail(DshockStatus::NullPointer, "output pointer is null"))
}

fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, DshockStatus> {
    if p.is_null() {
        return Err(fail(DshockStatus::NullPointer, format!("{what} is null")));
    }
    // SAFETY: non-null and NUL-terminated per the API contract.
    unsafe { CStr::from_ptr(p) }.to_str().map_err(|_| fail(DshockStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn dshock_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dshock_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Opaque solved 1-D Riemann problem.
pub struct DshockRiemann {
    data: RiemannData1D,
    path: DeltaShockPath1D,
}

/// Front state of a 1-D solution at time `t`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DshockFrontSample {
    pub t: f64,
    pub phi: f64,
    pub u_delta: f64,
    pub e: f64,
    pub mass_deficit: f64,
    pub momentum_deficit: f64,
}

fn flux(c0: f64) -> dshock::Result<dshock::FluxModel> {
    if c0 > 0.0 {
        relativistic_flux(1, c0)
    } else {
        standard_flux(1)
    }
}

/// Solves the 1-D Riemann problem with the discontinuity at the origin.
/// `c0 <= 0` selects the standard flux, `c0 > 0` the relativistic one. With
/// `e0 > 0` the front starts as a point mass moving at `u_delta0`.
#[no_mangle]
pub extern "C" fn dshock_riemann_solve(
    rho_l: f64,
    u_l: f64,
    rho_r: f64,
    u_r: f64,
    c0: f64,
    e0: f64,
    u_delta0: f64,
    out: *mut *mut DshockRiemann,
) -> DshockStatus {
    guard(|| {
        let out = out_ptr(out)?;
        *out = ptr::null_mut();
        let mut data = lib(RiemannData1D::new(rho_l, u_l, rho_r, u_r, lib(flux(c0))?))?;
        if e0 > 0.0 {
            data = lib(data.with_point_mass(e0, u_delta0))?;
        }
        let path = lib(solve_constant_states(&data))?;
        *out = Box::into_raw(Box::new(DshockRiemann { data, path }));
        Ok(())
    })
}

/// Evaluates the front of a solved problem at `t >= 0`.
///
/// # Safety
/// `h` must be null or a live handle from [`dshock_riemann_solve`].
#[no_mangle]
pub unsafe extern "C" fn dshock_riemann_eval(h: *const DshockRiemann, t: f64, out: *mut DshockFrontSample) -> DshockStatus {
    guard(|| {
        // SAFETY: per the function contract.
        let h = unsafe { h.as_ref() }.ok_or_else(|| fail(DshockStatus::NullPointer, "handle is null"))?;
        let out = out_ptr(out)?;
        let q = lib(h.path.at(t))?;
        let (mass, momentum) = lib(h.path.deficits(t))?;
        *out = DshockFrontSample { t, phi: q.phi, u_delta: q.u_delta, e: q.e, mass_deficit: mass, momentum_deficit: momentum };
        Ok(())
    })
}

/// True when the solved front moves at constant speed.
///
/// # Safety
/// `h` must be null or a live handle from [`dshock_riemann_solve`].
#[no_mangle]
pub unsafe extern "C" fn dshock_riemann_is_constant_speed(h: *const DshockRiemann, out: *mut bool) -> DshockStatus {
    guard(|| {
        // SAFETY: per the function contract.
        let h = unsafe { h.as_ref() }.ok_or_else(|| fail(DshockStatus::NullPointer, "handle is null"))?;
        *out_ptr(out)? = h.path.is_constant_speed();
        Ok(())
    })
}

/// Energy dissipation rate per unit front length at time `t`.
///
/// # Safety
/// `h` must be null or a live handle from [`dshock_riemann_solve`].
#[no_mangle]
pub unsafe extern "C" fn dshock_riemann_dissipation(h: *const DshockRiemann, t: f64, out: *mut f64) -> DshockStatus {
    guard(|| {
        // SAFETY: per the function contract.
        let h = unsafe { h.as_ref() }.ok_or_else(|| fail(DshockStatus::NullPointer, "handle is null"))?;
        let out = out_ptr(out)?;
        let q = lib(h.path.at(t))?;
        let d = &h.data;
        let sides = lib(SideStates::scalar(d.rho_l, d.u_l, d.rho_r, d.u_r))?;
        let front = lib(FrontState::planar_1d(q.e, q.u_delta))?;
        *out = lib(energy_dissipation_rate(&sides, &front))?.0;
        Ok(())
    })
}

/// Releases a handle from [`dshock_riemann_solve`].
///
/// # Safety
/// `h` must be null or a live handle that is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dshock_riemann_free(h: *mut DshockRiemann) {
    if !h.is_null() {
        // SAFETY: created by Box::into_raw in dshock_riemann_solve.
        drop(unsafe { Box::from_raw(h) });
    }
}

/// Whether a classical shock can connect the two states.
#[no_mangle]
pub extern "C" fn dshock_classical_shock_feasible(rho_l: f64, u_l: f64, rho_r: f64, u_r: f64, out: *mut bool) -> DshockStatus {
    guard(|| {
        let out = out_ptr(out)?;
        let d = lib(RiemannData1D::new(rho_l, u_l, rho_r, u_r, lib(standard_flux(1))?))?;
        *out = classical_shock_feasible(&d);
        Ok(())
    })
}

/// Opaque validated scenario.
pub struct DshockScenario {
    scenario: Scenario,
}

/// Parses and validates a scenario from JSON text.
///
/// # Safety
/// `json` must be null or a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn dshock_scenario_new(json: *const c_char, out: *mut *mut DshockScenario) -> DshockStatus {
    guard(|| {
        let out = out_ptr(out)?;
        *out = ptr::null_mut();
        let scenario = lib(Scenario::from_json(c_str(json, "json")?))?;
        *out = Box::into_raw(Box::new(DshockScenario { scenario }));
        Ok(())
    })
}

/// Runs a scenario, writing its artifacts into `out_dir`. `exit_code`
/// receives 0 when every enforced check passed and 4 otherwise; failures
/// before any check runs are reported through the status.
///
/// # Safety
/// `h` must be null or a live handle; `out_dir` null or NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn dshock_scenario_run(
    h: *const DshockScenario,
    out_dir: *const c_char,
    strict: bool,
    exit_code: *mut i32,
) -> DshockStatus {
    guard(|| {
        // SAFETY: per the function contract.
        let h = unsafe { h.as_ref() }.ok_or_else(|| fail(DshockStatus::NullPointer, "handle is null"))?;
        let code = out_ptr(exit_code)?;
        let mut opts = RunOptions::new(Path::new(c_str(out_dir, "out_dir")?));
        opts.strict = strict;
        *code = lib(run(&h.scenario, &opts))?.exit_code;
        Ok(())
    })
}

/// Releases a handle from [`dshock_scenario_new`].
///
/// # Safety
/// `h` must be null or a live handle that is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dshock_scenario_free(h: *mut DshockScenario) {
    if !h.is_null() {
        // SAFETY: created by Box::into_raw in dshock_scenario_new.
        drop(unsafe { Box::from_raw(h) });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_mapping() {
        assert_eq!(DshockStatus::from(&Error::Schema("x".into())), DshockStatus::Schema);
        assert_eq!(DshockStatus::from(&Error::InvalidParameter("x".into())), DshockStatus::InvalidArgument);
        assert_eq!(DshockStatus::from(&Error::Caustic(1.0)), DshockStatus::Numerical);
    }

    #[test]
    fn panics_become_status() {
        let s = guard(|| panic!("boom"));
        assert_eq!(s, DshockStatus::Panic);
        let msg = unsafe { CStr::from_ptr(dshock_last_error()) };
        assert!(msg.to_str().unwrap().contains("boom"));
        assert_eq!(guard(|| Ok(())), DshockStatus::Ok);
        assert!(dshock_last_error().is_null());
    }
}
