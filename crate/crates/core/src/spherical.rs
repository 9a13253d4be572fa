//! Spherically symmetric delta-shock fronts `S = -r + phi(t)`.
//!
//! Orientation: `{S < 0}` is the exterior, so the `-` side is the OUTER field
//! and the front normal is `-x/r`. Jumps below are `outer - inner`. For
//! `n = 1` the radial coordinate is the signed line coordinate and the
//! sphere measure is taken as 1.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::expr::{Expr, Var};
use crate::fluxes::standard_flux;
use crate::ode::{self, Control, OdeOptions};
use crate::quadrature::Composite;
use crate::riemann1d::{entropy_speed, RiemannData1D};

/// Measure of the unit sphere in `R^n`, with the planar convention 1 for `n = 1`.
pub fn sphere_measure(n: usize) -> f64 {
    use std::f64::consts::PI;
    match n {
        0 => 0.0,
        1 => 1.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => 2.0 * PI / (n as f64 - 2.0) * sphere_measure(n - 2),
    }
}

/// Serializable description of a radial field. Expressions use `r` (or `x`)
/// for the radius and `t` for time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RadialFieldSpec {
    Constant {
        rho: f64,
        u: f64,
    },
    /// Pressureless free flow from initial data `rho0(r)`, `u0(r)`, optionally
    /// supported on `[lo, hi]` at `t = 0`.
    FreeFlow {
        rho0: String,
        u0: String,
        #[serde(default)]
        support: Option<[f64; 2]>,
    },
    Expression {
        rho: String,
        u: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
enum FieldKind {
    Constant { rho: f64, u: f64 },
    FreeFlow { rho0: Expr, u0: Expr, du0: Expr, support: Option<(f64, f64)> },
    Expression { rho: Expr, u: Expr },
}

/// Density and radial velocity `(rho(r, t), u(r, t))`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialField {
    kind: FieldKind,
    spec: RadialFieldSpec,
}

fn parse_radial(src: &str) -> Result<Expr> {
    let e = Expr::parse(src)?;
    if e.max_coord() > 1 {
        return Err(Error::Expression(format!("radial field `{src}` may only use r, x and t")));
    }
    Ok(e)
}

impl RadialField {
    pub fn constant(rho: f64, u: f64) -> Result<Self> {
        Self::from_spec(&RadialFieldSpec::Constant { rho, u })
    }

    pub fn vacuum() -> Self {
        Self::constant(0.0, 0.0).expect("vacuum is valid")
    }

    pub fn free_flow(rho0: &str, u0: &str, support: Option<(f64, f64)>) -> Result<Self> {
        Self::from_spec(&RadialFieldSpec::FreeFlow { rho0: rho0.into(), u0: u0.into(), support: support.map(|(a, b)| [a, b]) })
    }

    pub fn expression(rho: &str, u: &str) -> Result<Self> {
        Self::from_spec(&RadialFieldSpec::Expression { rho: rho.into(), u: u.into() })
    }

    pub fn from_spec(spec: &RadialFieldSpec) -> Result<Self> {
        let kind = match spec {
            RadialFieldSpec::Constant { rho, u } => {
                ensure_finite("constant field", &[*rho, *u])?;
                if *rho < 0.0 {
                    return Err(Error::InvalidParameter("density must be nonnegative".into()));
                }
                FieldKind::Constant { rho: *rho, u: *u }
            }
            RadialFieldSpec::FreeFlow { rho0, u0, support } => {
                let u0 = parse_radial(u0)?;
                if let Some([a, b]) = support {
                    ensure_finite("support", &[*a, *b])?;
                    if !(a < b) {
                        return Err(Error::InvalidParameter(format!("empty support [{a}, {b}]")));
                    }
                }
                FieldKind::FreeFlow { rho0: parse_radial(rho0)?, du0: u0.diff(Var::Coord(0)), u0, support: support.map(|[a, b]| (a, b)) }
            }
            RadialFieldSpec::Expression { rho, u } => FieldKind::Expression { rho: parse_radial(rho)?, u: parse_radial(u)? },
        };
        Ok(RadialField { kind, spec: spec.clone() })
    }

    pub fn spec(&self) -> &RadialFieldSpec {
        &self.spec
    }

    /// Characteristic foot `r0` with `r = r0 + t u0(r0)` and `dr/dr0`.
    fn foot(u0: &Expr, du0: &Expr, r: f64, t: f64) -> Result<(f64, f64)> {
        let mut r0 = r - t * u0.eval(&[r], 0.0);
        for _ in 0..60 {
            let g = r0 + t * u0.eval(&[r0], 0.0) - r;
            let dg = 1.0 + t * du0.eval(&[r0], 0.0);
            if !(dg > 0.0) {
                return Err(Error::Caustic(r));
            }
            let step = g / dg;
            r0 -= step;
            if step.abs() <= 1e-15 * (1.0 + r0.abs()) {
                let dg = 1.0 + t * du0.eval(&[r0], 0.0);
                if !(dg > 0.0) {
                    return Err(Error::Caustic(r));
                }
                return Ok((r0, dg));
            }
        }
        Err(Error::NotConverged(format!("characteristic foot of r = {r} at t = {t}")))
    }

    /// `(rho, u)` at radius `r` and time `t` in dimension `n`.
    pub fn eval(&self, r: f64, t: f64, n: usize) -> Result<(f64, f64)> {
        let (rho, u) = match &self.kind {
            FieldKind::Constant { rho, u } => (*rho, *u),
            FieldKind::Expression { rho, u } => (rho.eval(&[r], t), u.eval(&[r], t)),
            FieldKind::FreeFlow { rho0, u0, du0, support } => {
                let (r0, jac) = Self::foot(u0, du0, r, t)?;
                if n >= 2 && r0 <= 0.0 {
                    return Err(Error::Caustic(r));
                }
                let u = u0.eval(&[r0], 0.0);
                let inside = support.is_none_or(|(a, b)| a <= r0 && r0 <= b);
                let rho = if inside {
                    let geo = if n >= 2 { (r0 / r).powi(n as i32 - 1) } else { 1.0 };
                    rho0.eval(&[r0], 0.0) * geo / jac
                } else {
                    0.0
                };
                (rho, u)
            }
        };
        if !rho.is_finite() || !u.is_finite() {
            return Err(Error::NonFinite(format!("radial field at r = {r}, t = {t}")));
        }
        Ok((rho.max(0.0), u))
    }

    /// Radii where the field may be discontinuous at time `t`.
    pub fn breakpoints(&self, t: f64) -> Vec<f64> {
        match &self.kind {
            FieldKind::FreeFlow { u0, support: Some((a, b)), .. } => vec![a + t * u0.eval(&[*a], 0.0), b + t * u0.eval(&[*b], 0.0)],
            _ => vec![],
        }
    }

    fn straddles_edge(&self, r_lo: f64, r_hi: f64, t_lo: f64, t_hi: f64) -> bool {
        let mut edges = self.breakpoints(t_lo);
        edges.extend(self.breakpoints(t_hi));
        if edges.is_empty() {
            return false;
        }
        let (lo, hi) = (edges[0].min(edges[2]), edges[0].max(edges[2]));
        let (lo2, hi2) = (edges[1].min(edges[3]), edges[1].max(edges[3]));
        let hits = |a: f64, b: f64| r_hi >= a && r_lo <= b;
        hits(lo, hi) || hits(lo2, hi2)
    }
}

/// Maximum finite-difference residual of
/// `rho_t + (rho u)_r + (n-1) rho u / r = 0` and
/// `(rho u)_t + (rho u^2)_r + (n-1) rho u^2 / r = 0`
/// over a `samples x samples` grid of `[r_lo, r_hi] x [t_lo, t_hi]`.
/// Stencils crossing a support edge are skipped.
pub fn validate_field(f: &RadialField, n: usize, r_range: (f64, f64), t_range: (f64, f64), samples: usize, h: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidDimension("n must be at least 1".into()));
    }
    let (r_lo, r_hi) = r_range;
    let (t_lo, t_hi) = t_range;
    if n >= 2 && r_lo - h <= 0.0 {
        return Err(Error::InvalidParameter("sample box must stay away from r = 0".into()));
    }
    let samples = samples.max(2);
    let mut worst = 0.0f64;
    for i in 0..samples {
        let r = r_lo + (r_hi - r_lo) * i as f64 / (samples - 1) as f64;
        for k in 0..samples {
            let t = t_lo + (t_hi - t_lo) * k as f64 / (samples - 1) as f64;
            if f.straddles_edge(r - h, r + h, t - h, t + h) {
                continue;
            }
            let q = |r: f64, t: f64| -> Result<(f64, f64, f64)> {
                let (rho, u) = f.eval(r, t, n)?;
                Ok((rho, rho * u, rho * u * u))
            };
            let (rho, m, e) = q(r, t)?;
            let (_, mt1, _) = q(r, t + h)?;
            let (_, mt0, _) = q(r, t - h)?;
            let (rt1, _, _) = q(r, t + h)?;
            let (rt0, _, _) = q(r, t - h)?;
            let (_, mr1, er1) = q(r + h, t)?;
            let (_, mr0, er0) = q(r - h, t)?;
            let geo = if n >= 2 { (n as f64 - 1.0) / r } else { 0.0 };
            let res1 = (rt1 - rt0) / (2.0 * h) + (mr1 - mr0) / (2.0 * h) + geo * m;
            let res2 = (mt1 - mt0) / (2.0 * h) + (er1 - er0) / (2.0 * h) + geo * e;
            let _ = rho;
            worst = worst.max(res1.abs()).max(res2.abs());
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalFrontState {
    pub t: f64,
    pub phi: f64,
    pub e: f64,
    pub u_delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Completed,
    /// The front reached `r_min`.
    Focused,
    /// The non-strict entropy condition failed.
    EntropyViolation,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalSample {
    pub t: f64,
    pub phi: f64,
    pub u_delta: f64,
    pub e: f64,
    pub entropy_ok: bool,
    pub entropy_strict: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SphericalTrajectory {
    pub n: usize,
    pub samples: Vec<SphericalSample>,
    pub stop: StopReason,
    pub r_min: f64,
}

impl SphericalTrajectory {
    /// Front mass `m = e |S^(n-1)| phi^(n-1)`.
    pub fn front_mass(&self, s: &SphericalSample) -> f64 {
        front_mass(self.n, s.phi, s.e)
    }
}

pub fn front_mass(n: usize, phi: f64, e: f64) -> f64 {
    if n == 1 {
        e
    } else {
        e * sphere_measure(n) * phi.powi(n as i32 - 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontOptions {
    pub ode: OdeOptions,
    /// Focusing radius; defaults to `1e-3 phi0`. Ignored for `n = 1`.
    pub r_min: Option<f64>,
    /// Number of output intervals on `[t0, t_end]`.
    pub samples: usize,
}

impl Default for FrontOptions {
    fn default() -> Self {
        FrontOptions { ode: OdeOptions::default(), r_min: None, samples: 200 }
    }
}

/// Constant-speed entropy root of the local jump data, or `None` when the
/// data do not determine one.
pub fn local_speed(inner: &RadialField, outer: &RadialField, n: usize, phi: f64, t: f64) -> Result<Option<f64>> {
    let (ro, uo) = outer.eval(phi, t, n)?;
    let (ri, ui) = inner.eval(phi, t, n)?;
    // along the normal -x/r, outer is the left state with velocity -u
    let d = RiemannData1D::new(ro, -uo, ri, -ui, standard_flux(1)?)?;
    Ok(entropy_speed(&d).ok().map(|s| -s))
}

/// Right-hand side `(de/dt, d(e phi_dot)/dt)` at front speed `w`.
pub fn front_rates(inner: &RadialField, outer: &RadialField, n: usize, t: f64, phi: f64, e: f64, w: f64) -> Result<(f64, f64)> {
    let (ro, uo) = outer.eval(phi, t, n)?;
    let (ri, ui) = inner.eval(phi, t, n)?;
    let j_rho = ro - ri;
    let j_m = ro * uo - ri * ui;
    let j_e = ro * uo * uo - ri * ui * ui;
    let k = if n >= 2 { (n as f64 - 1.0) / phi } else { 0.0 };
    Ok((-j_m + j_rho * w - e * w * k, -j_e + j_m * w - e * w * w * k))
}

/// `(non-strict, strict)` entropy test `u_outer <= w <= u_inner`.
pub fn spherical_entropy(inner: &RadialField, outer: &RadialField, n: usize, t: f64, phi: f64, w: f64) -> Result<(bool, bool)> {
    let (_, uo) = outer.eval(phi, t, n)?;
    let (_, ui) = inner.eval(phi, t, n)?;
    let slack = 1e-12 * (1.0 + uo.abs() + ui.abs());
    Ok((uo - slack <= w && w <= ui + slack, uo < w && w < ui))
}

/// Integrates the front radius, surface density and radial momentum density
/// `E = e phi_dot` with an adaptive Dormand-Prince scheme.
pub fn integrate_front(
    inner: &RadialField,
    outer: &RadialField,
    init: SphericalFrontState,
    n: usize,
    t_end: f64,
    opts: &FrontOptions,
) -> Result<SphericalTrajectory> {
    if n == 0 {
        return Err(Error::InvalidDimension("n must be at least 1".into()));
    }
    ensure_finite("front state", &[init.t, init.phi, init.e, init.u_delta, t_end])?;
    if init.e < 0.0 {
        return Err(Error::InvalidParameter("e0 must be nonnegative".into()));
    }
    if !(t_end > init.t) {
        return Err(Error::InvalidParameter("t_end must exceed the initial time".into()));
    }
    let r_min = if n >= 2 {
        let r = opts.r_min.unwrap_or(1e-3 * init.phi);
        if !(init.phi > r) {
            return Err(Error::InvalidParameter(format!("phi0 = {} must exceed r_min = {r}", init.phi)));
        }
        r
    } else {
        f64::NEG_INFINITY
    };
    let seed = |phi: f64, t: f64| -> Result<f64> { Ok(local_speed(inner, outer, n, phi, t)?.unwrap_or(init.u_delta)) };
    let w0 = if init.e > 0.0 { init.u_delta } else { seed(init.phi, init.t)? };
    let (ok0, _) = spherical_entropy(inner, outer, n, init.t, init.phi, w0)?;
    if !ok0 {
        return Err(Error::NoDeltaShock(format!("initial front speed {w0} violates the entropy condition")));
    }
    let speed = |t: f64, y: &[f64]| -> Result<f64> {
        if y[1] > 0.0 {
            Ok(y[2] / y[1])
        } else {
            seed(y[0], t)
        }
    };
    let rhs = |t: f64, y: &[f64], d: &mut [f64]| -> Result<()> {
        let w = speed(t, y)?;
        let (de, dm) = front_rates(inner, outer, n, t, y[0], y[1], w)?;
        d[0] = w;
        d[1] = de;
        d[2] = dm;
        Ok(())
    };
    let steps = opts.samples.max(1);
    let t_out: Vec<f64> =
        (1..=steps).map(|k| if k == steps { t_end } else { init.t + (t_end - init.t) * k as f64 / steps as f64 }).collect();
    let mut stop = StopReason::Completed;
    let y0 = [init.phi, init.e, init.e * w0];
    let run = ode::solve(rhs, init.t, &y0, &t_out, &opts.ode, |t, y| {
        if y[0] <= r_min {
            stop = StopReason::Focused;
            return Ok(Control::Stop);
        }
        let w = speed(t, y)?;
        let (ok, _) = spherical_entropy(inner, outer, n, t, y[0], w)?;
        if !ok {
            stop = StopReason::EntropyViolation;
            return Ok(Control::Stop);
        }
        Ok(Control::Continue)
    })?;
    let mut samples = Vec::with_capacity(run.samples.len());
    for (t, y) in &run.samples {
        let w = speed(*t, y)?;
        let (ok, strict) = spherical_entropy(inner, outer, n, *t, y[0], w)?;
        samples.push(SphericalSample { t: *t, phi: y[0], u_delta: w, e: y[1].max(0.0), entropy_ok: ok, entropy_strict: strict });
    }
    Ok(SphericalTrajectory { n, samples, stop, r_min })
}

/// Mass, radial momentum and kinetic energy of the regular part and of the
/// front at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SphericalAuditRow {
    pub t: f64,
    pub mass: f64,
    pub front_mass: f64,
    pub momentum: f64,
    pub front_momentum: f64,
    pub energy: f64,
    pub front_energy: f64,
    /// `int rho |u|` plus the front's `m |u_delta|`.
    pub abs_momentum: f64,
}

/// Audits the trajectory on the annulus `[r_lo, r_hi]` (the interval for
/// `n = 1`), which must contain the support of both fields.
pub fn mass_audit_spherical(
    traj: &SphericalTrajectory,
    inner: &RadialField,
    outer: &RadialField,
    window: (f64, f64),
    quad: &Composite,
) -> Result<Vec<SphericalAuditRow>> {
    let n = traj.n;
    let (lo, hi) = window;
    if !(lo < hi) || (n >= 2 && lo < 0.0) {
        return Err(Error::AuditInvalid(format!("bad audit window [{lo}, {hi}]")));
    }
    let weight = |r: f64| if n == 1 { 1.0 } else { sphere_measure(n) * r.powi(n as i32 - 1) };
    let mut rows = Vec::with_capacity(traj.samples.len());
    for s in &traj.samples {
        if s.phi < lo || s.phi > hi {
            return Err(Error::AuditInvalid(format!("front at {} left the audit window", s.phi)));
        }
        let mut acc = [0.0f64; 4];
        for (field, a, b) in [(inner, lo, s.phi), (outer, s.phi, hi)] {
            let mut breaks = inner.breakpoints(s.t);
            breaks.extend(outer.breakpoints(s.t));
            for (r, w) in quad.nodes(a, b, &breaks) {
                let (rho, u) = field.eval(r, s.t, n)?;
                let wr = w * weight(r) * rho;
                acc[0] += wr;
                acc[1] += wr * u;
                acc[2] += 0.5 * wr * u * u;
                acc[3] += wr * u.abs();
            }
        }
        let m = traj.front_mass(s);
        rows.push(SphericalAuditRow {
            t: s.t,
            mass: acc[0],
            front_mass: m,
            momentum: acc[1],
            front_momentum: m * s.u_delta,
            energy: acc[2],
            front_energy: 0.5 * m * s.u_delta * s.u_delta,
            abs_momentum: acc[3] + m * s.u_delta.abs(),
        });
    }
    Ok(rows)
}
