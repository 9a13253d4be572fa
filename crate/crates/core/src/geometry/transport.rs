//! Numerical residuals of the volume and surface transport theorems and of
//! the integration-by-parts formula on a moving front.

use std::fmt;
use std::sync::Arc;

use super::surface::box_nodes;
use super::{delta_time_unchecked, LevelSetFront, ScalarField, SurfacePatchQuadrature};
use crate::error::{Error, Result};
use crate::quadrature::{Composite, GaussLegendre};
use crate::testfn::TestFunction;
use crate::tolerances;
use crate::vecops::{dot, norm, scale, tangent_basis};

/// Radius history `R(t)` together with its rate `R'(t)`.
#[derive(Clone)]
pub struct RadiusLaw {
    radius: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    rate: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for RadiusLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RadiusLaw(R(0) = {}, R'(0) = {})", self.radius(0.0), self.rate(0.0))
    }
}

impl RadiusLaw {
    pub fn constant(r: f64) -> Self {
        Self::affine(r, 0.0)
    }

    /// `R(t) = r0 + v t`.
    pub fn affine(r0: f64, v: f64) -> Self {
        RadiusLaw { radius: Arc::new(move |t| r0 + v * t), rate: Arc::new(move |_| v) }
    }

    pub fn from_fns(radius: impl Fn(f64) -> f64 + Send + Sync + 'static, rate: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        RadiusLaw { radius: Arc::new(radius), rate: Arc::new(rate) }
    }

    pub fn radius(&self, t: f64) -> f64 {
        (self.radius)(t)
    }

    pub fn rate(&self, t: f64) -> f64 {
        (self.rate)(t)
    }
}

/// A front with a chart at every time.
#[derive(Debug, Clone)]
pub enum MovingSurface {
    /// `nu . x = offset + speed t`, tangential window fixed in the chart
    /// coordinates (so chart points follow the normal lines).
    Plane { normal: Vec<f64>, offset: f64, speed: f64, window: Vec<(f64, f64)> },
    /// `|x - center| = R(t)`, outward normal.
    Sphere { center: Vec<f64>, radius: RadiusLaw },
}

impl MovingSurface {
    pub fn dim(&self) -> usize {
        match self {
            MovingSurface::Plane { normal, .. } => normal.len(),
            MovingSurface::Sphere { center, .. } => center.len(),
        }
    }

    pub fn front(&self) -> Result<LevelSetFront> {
        match self {
            MovingSurface::Plane { normal, offset, speed, .. } => LevelSetFront::plane(normal, *offset, *speed),
            MovingSurface::Sphere { center, radius } => LevelSetFront::sphere(center, radius.clone()),
        }
    }

    pub fn quadrature(&self, t: f64, order: usize, panels: usize) -> Result<SurfacePatchQuadrature> {
        match self {
            MovingSurface::Plane { normal, offset, speed, window } => {
                let len = norm(normal);
                SurfacePatchQuadrature::plane(&scale(normal, 1.0 / len), offset + speed * t, window.clone(), order, panels)
            }
            MovingSurface::Sphere { center, radius } => SurfacePatchQuadrature::sphere(center, radius.radius(t), order),
        }
    }

    /// Same surface with the tangential window replaced by the projection of
    /// a spatial box (planes only).
    fn covering(&self, space_box: &[(f64, f64)]) -> MovingSurface {
        match self {
            MovingSurface::Plane { normal, offset, speed, .. } => {
                let len = norm(normal);
                let nu = scale(normal, 1.0 / len);
                let tb = tangent_basis(&nu);
                let window = tb
                    .iter()
                    .map(|tau| {
                        let mut lo = 0.0;
                        let mut hi = 0.0;
                        for (k, &(a, b)) in space_box.iter().enumerate() {
                            let (p, q) = (tau[k] * a, tau[k] * b);
                            lo += p.min(q);
                            hi += p.max(q);
                        }
                        (lo, hi)
                    })
                    .collect();
                MovingSurface::Plane { normal: nu, offset: *offset, speed: *speed, window }
            }
            other => other.clone(),
        }
    }
}

/// A moving solid region for the volume transport theorem.
#[derive(Debug, Clone)]
pub enum MovingRegion {
    Ball {
        center: Vec<f64>,
        radius: RadiusLaw,
    },
    /// Axis-aligned box with faces moving at constant rates.
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
        lo_rate: Vec<f64>,
        hi_rate: Vec<f64>,
    },
}

/// Finite-difference steps for the transport checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdSteps {
    /// Central-difference step in time.
    pub dt: f64,
    /// Spatial step for curvature and normal derivatives.
    pub h: f64,
    /// Gauss points per direction (and per panel).
    pub order: usize,
}

impl Default for FdSteps {
    fn default() -> Self {
        FdSteps { dt: tolerances::DT_TRANSPORT, h: tolerances::H_CURV, order: 16 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportResidual {
    pub lhs: f64,
    pub rhs: f64,
}

impl TransportResidual {
    pub fn residual(&self) -> f64 {
        (self.lhs - self.rhs).abs()
    }
}

fn surface_mass(e: ScalarField<'_>, surface: &MovingSurface, t: f64, order: usize) -> Result<f64> {
    let q = surface.quadrature(t, order, 1)?;
    super::surface_integral(|x| e(x, t), &q)
}

/// `d/dt int_{Gamma_t} e dmu` (central difference in `t`) against
/// `int_{Gamma_t} (delta e/delta t - 2 K G e) dmu`.
pub fn check_surface_transport(e: ScalarField<'_>, surface: &MovingSurface, t: f64, steps: FdSteps) -> Result<TransportResidual> {
    let front = surface.front()?;
    let dt = steps.dt;
    let lhs = (surface_mass(e, surface, t + dt, steps.order)? - surface_mass(e, surface, t - dt, steps.order)?) / (2.0 * dt);
    let q = surface.quadrature(t, steps.order, 1)?;
    let mut rhs = 0.0;
    for (x, w) in q.nodes.iter().zip(&q.weights) {
        let de = delta_time_unchecked(e, &front, x, t, steps.h)?;
        let (_, g) = front.kinematics(x, t)?;
        let k = -0.5 * front.normal_divergence(x, t, steps.h)?;
        rhs += w * (de - 2.0 * k * g * e(x, t));
    }
    Ok(TransportResidual { lhs, rhs })
}

fn region_integral(f: ScalarField<'_>, region: &MovingRegion, t: f64, order: usize) -> Result<f64> {
    match region {
        MovingRegion::Ball { center, radius } => {
            let r = radius.radius(t);
            let n = center.len();
            if n == 1 {
                let gl = GaussLegendre::new(order);
                return Ok(gl.integrate(center[0] - r, center[0] + r, |x| f(&[x], t)));
            }
            let gl = GaussLegendre::new(order);
            let mut acc = 0.0;
            for (rho, wr) in gl.mapped(0.0, r) {
                let shell = SurfacePatchQuadrature::sphere(center, rho, order)?;
                acc += wr * super::surface_integral(|x| f(x, t), &shell)?;
            }
            Ok(acc)
        }
        MovingRegion::Box { lo, hi, lo_rate, hi_rate } => {
            let window: Vec<(f64, f64)> = (0..lo.len()).map(|k| (lo[k] + lo_rate[k] * t, hi[k] + hi_rate[k] * t)).collect();
            let (nodes, weights) = box_nodes(&window, order, 1);
            Ok(nodes.iter().zip(&weights).map(|(x, w)| w * f(x, t)).sum())
        }
    }
}

fn region_boundary_flux(f: ScalarField<'_>, region: &MovingRegion, t: f64, order: usize) -> Result<f64> {
    match region {
        MovingRegion::Ball { center, radius } => {
            let q = SurfacePatchQuadrature::sphere(center, radius.radius(t), order)?;
            Ok(radius.rate(t) * super::surface_integral(|x| f(x, t), &q)?)
        }
        MovingRegion::Box { lo, hi, lo_rate, hi_rate } => {
            let n = lo.len();
            let cur: Vec<(f64, f64)> = (0..n).map(|k| (lo[k] + lo_rate[k] * t, hi[k] + hi_rate[k] * t)).collect();
            let mut acc = 0.0;
            for k in 0..n {
                let face: Vec<(f64, f64)> = cur.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, w)| *w).collect();
                let (nodes, weights) = box_nodes(&face, order, 1);
                for (side, pos, rate) in [(1.0, cur[k].1, hi_rate[k]), (-1.0, cur[k].0, lo_rate[k])] {
                    let mut s = 0.0;
                    for (y, w) in nodes.iter().zip(&weights) {
                        let mut x = y.clone();
                        x.insert(k, pos);
                        s += w * f(&x, t);
                    }
                    acc += side * rate * s;
                }
            }
            Ok(acc)
        }
    }
}

/// `d/dt int_{Omega_t} f dx` against `int f_t dx + int_{dOmega_t} f W.nu dmu`.
pub fn check_volume_transport(f: ScalarField<'_>, region: &MovingRegion, t: f64, steps: FdSteps) -> Result<TransportResidual> {
    let dt = steps.dt;
    let lhs = (region_integral(f, region, t + dt, steps.order)? - region_integral(f, region, t - dt, steps.order)?) / (2.0 * dt);
    let ft = |x: &[f64], s: f64| (f(x, s + dt) - f(x, s - dt)) / (2.0 * dt);
    let rhs = region_integral(&ft, region, t, steps.order)? + region_boundary_flux(f, region, t, steps.order)?;
    Ok(TransportResidual { lhs, rhs })
}

/// Both sides of the integration-by-parts formula on `Gamma cap {0 <= t <= T}`:
/// `lhs = int int e (delta phi/delta t) dmu dt` and
/// `rhs = -int int (delta e/delta t - 2 K G e) phi dmu dt - int_{Gamma_0} e phi dmu`.
///
/// `space_box` must strictly contain the spatial support of `phi`, and the
/// time support of `phi` must end before `horizon`.
pub fn check_integration_by_parts(
    e: ScalarField<'_>,
    phi: &TestFunction,
    surface: &MovingSurface,
    horizon: f64,
    space_box: &[(f64, f64)],
    steps: FdSteps,
    panels: usize,
) -> Result<TransportResidual> {
    let n = surface.dim();
    if phi.dim() != n || space_box.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: phi.dim().min(space_box.len()) });
    }
    for (k, ((lo, hi), (a, b))) in phi.space_box().iter().zip(space_box).enumerate() {
        if *lo <= *a || *hi >= *b {
            return Err(Error::SupportViolation(format!("axis {k}: support [{lo}, {hi}] not inside box [{a}, {b}]")));
        }
    }
    let (_, t_hi) = phi.time_range();
    if t_hi >= horizon {
        return Err(Error::SupportViolation(format!("time support ends at {t_hi}, beyond horizon {horizon}")));
    }
    let surface = surface.covering(space_box);
    let front = surface.front()?;
    let rule = Composite::new(steps.order, panels);
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for (t, wt) in rule.nodes(0.0, horizon, &[]) {
        let q = surface.quadrature(t, steps.order, panels)?;
        for (x, w) in q.nodes.iter().zip(&q.weights) {
            let (v, grad, phi_t) = phi.eval_all(x, t);
            if v == 0.0 && grad.iter().all(|g| *g == 0.0) {
                continue;
            }
            let (nu, g) = front.kinematics(x, t)?;
            let dphi = phi_t + g * dot(&nu, &grad);
            let ev = e(x, t);
            lhs += wt * w * ev * dphi;
            let de = delta_time_unchecked(e, &front, x, t, steps.h)?;
            let k = -0.5 * front.normal_divergence(x, t, steps.h)?;
            rhs -= wt * w * (de - 2.0 * k * g * ev) * v;
        }
    }
    let q0 = surface.quadrature(0.0, steps.order, panels)?;
    rhs -= super::surface_integral(|x| e(x, 0.0) * phi.value(x, 0.0), &q0)?;
    Ok(TransportResidual { lhs, rhs })
}
