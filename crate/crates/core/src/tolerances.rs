//! Numerical tolerances and default step sizes shared across modules.
//!
//! Acceptance thresholds live next to the checks that use them; this module
//! holds the values that more than one module depends on.

/// Relative distance to the front within which a point counts as on it.
pub const ON_SURFACE: f64 = 1e-9;
/// Relative distance within which one Newton projection is attempted.
pub const NEAR_SURFACE: f64 = 1e-6;
/// Gradient magnitude below which a level set is considered degenerate.
pub const DEGENERATE_GRADIENT: f64 = 1e-12;

/// Curvature finite-difference step, relative to the front's length scale.
pub const H_CURV: f64 = 1e-4;
/// Time step for transport-theorem central differences.
pub const DT_TRANSPORT: f64 = 1e-4;
/// Step used for central-difference gradients of closure level sets.
pub const H_GRAD: f64 = 1e-6;

/// Conservation tolerance for closed-form solutions (relative).
pub const CONS_CLOSED_FORM: f64 = 1e-8;
/// Conservation tolerance for ODE-integrated trajectories (relative).
pub const CONS_INTEGRATED: f64 = 1e-6;
/// Monotonicity slack for closed-form energy series.
pub const MONO_CLOSED_FORM: f64 = 1e-9;
/// Monotonicity slack for integrated energy series.
pub const MONO_INTEGRATED: f64 = 1e-6;

/// Events closer than this in time are merged as one collision.
pub const SIMULTANEOUS_EVENTS: f64 = 1e-13;
/// Collision times more negative than this indicate a broken event queue.
pub const NEGATIVE_EVENT_TIME: f64 = 1e-12;

/// Relative threshold under which the leading coefficient of the
/// constant-speed quadratic is treated as zero.
pub const QUADRATIC_DEGENERATE: f64 = 1e-14;
