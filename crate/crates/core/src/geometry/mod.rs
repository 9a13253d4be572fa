//! Moving-hypersurface calculus for fronts `Gamma_t = {x : S(x, t) = 0}`.
//!
//! Sign conventions used everywhere in the crate:
//! `nu = grad S / |grad S|` (pointing from `S < 0` into `S > 0`),
//! `G = -S_t / |grad S|`, mean curvature `K = -div(nu) / 2`, and the
//! delta-shock velocity `U_delta = G nu`.

pub mod suite;
mod surface;
mod transport;

pub use surface::{surface_integral, Chart, SurfacePatchQuadrature};
pub use transport::{
    check_integration_by_parts, check_surface_transport, check_volume_transport, FdSteps, MovingRegion, MovingSurface, RadiusLaw,
    TransportResidual,
};

use std::fmt;
use std::sync::Arc;

use crate::error::{ensure_finite, Error, Result};
use crate::expr::{Expr, Var};
use crate::tolerances;
use crate::vecops::{dot, norm, scale};

pub type LevelFn = Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;
/// Returns `(grad S, S_t)`.
pub type GradFn = Arc<dyn Fn(&[f64], f64) -> (Vec<f64>, f64) + Send + Sync>;
/// Scalar field on (a neighborhood of) the front.
pub type ScalarField<'a> = &'a (dyn Fn(&[f64], f64) -> f64 + Sync);
/// Vector field on (a neighborhood of) the front.
pub type VectorField<'a> = &'a (dyn Fn(&[f64], f64) -> Vec<f64> + Sync);

#[derive(Clone)]
pub enum GradMode {
    Analytic(GradFn),
    CentralDifference { h: f64 },
}

impl fmt::Debug for GradMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GradMode::Analytic(_) => write!(f, "Analytic"),
            GradMode::CentralDifference { h } => write!(f, "CentralDifference({h:e})"),
        }
    }
}

/// A front given implicitly by a level-set function.
#[derive(Clone)]
pub struct LevelSetFront {
    dim: usize,
    level: LevelFn,
    grad: GradMode,
    length_scale: f64,
}

impl fmt::Debug for LevelSetFront {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LevelSetFront").field("dim", &self.dim).field("grad", &self.grad).field("length_scale", &self.length_scale).finish()
    }
}

impl LevelSetFront {
    /// Front from closures; gradients by central differences with step `h`.
    pub fn from_fn(dim: usize, level: LevelFn, length_scale: f64, h: f64) -> Result<Self> {
        check_dim(dim)?;
        Ok(LevelSetFront { dim, level, grad: GradMode::CentralDifference { h }, length_scale })
    }

    pub fn with_gradient(dim: usize, level: LevelFn, grad: GradFn, length_scale: f64) -> Result<Self> {
        check_dim(dim)?;
        Ok(LevelSetFront { dim, level, grad: GradMode::Analytic(grad), length_scale })
    }

    /// Plane `nu . x = offset + speed * t` with unit normal `nu`.
    pub fn plane(normal: &[f64], offset: f64, speed: f64) -> Result<Self> {
        let nu = unit(normal)?;
        let nu_l = nu.clone();
        let nu_g = nu.clone();
        Self::with_gradient(
            nu.len(),
            Arc::new(move |x, t| dot(&nu_l, x) - offset - speed * t),
            Arc::new(move |_, _| (nu_g.clone(), -speed)),
            1.0,
        )
    }

    /// Sphere `|x - c| = R(t)` with outward normal.
    pub fn sphere(center: &[f64], radius: RadiusLaw) -> Result<Self> {
        let c = center.to_vec();
        let c2 = c.clone();
        let r1 = radius.clone();
        let scale = radius.radius(0.0).abs().max(f64::MIN_POSITIVE);
        Self::with_gradient(
            c.len(),
            Arc::new(move |x, t| dist(x, &c) - r1.radius(t)),
            Arc::new(move |x, t| {
                let d = dist(x, &c2);
                let g = x.iter().zip(&c2).map(|(a, b)| (a - b) / d).collect();
                (g, -radius.rate(t))
            }),
            scale,
        )
    }

    /// Sphere written as `S = -|x - c| + phi(t)`: the exterior is the `S < 0`
    /// side and the normal points inward.
    pub fn inward_sphere(center: &[f64], radius: RadiusLaw) -> Result<Self> {
        let c = center.to_vec();
        let c2 = c.clone();
        let r1 = radius.clone();
        let scale = radius.radius(0.0).abs().max(f64::MIN_POSITIVE);
        Self::with_gradient(
            c.len(),
            Arc::new(move |x, t| -dist(x, &c) + r1.radius(t)),
            Arc::new(move |x, t| {
                let d = dist(x, &c2);
                let g = x.iter().zip(&c2).map(|(a, b)| -(a - b) / d).collect();
                (g, radius.rate(t))
            }),
            scale,
        )
    }

    /// Front from an expression in `x1..xn`, `|x|` and `t`, with symbolic
    /// gradients.
    pub fn from_expr(src: &str, dim: usize, length_scale: f64) -> Result<Self> {
        let e = Expr::parse(src)?;
        if e.max_coord() > dim {
            return Err(Error::Expression(format!("`{src}` references x{} but the front is {dim}-dimensional", e.max_coord())));
        }
        let dx: Vec<Expr> = (0..dim).map(|k| e.diff(Var::Coord(k))).collect();
        let de = e.diff(Var::Time);
        let e = Arc::new(e);
        Self::with_gradient(
            dim,
            Arc::new(move |x, t| e.eval(x, t)),
            Arc::new(move |x, t| (dx.iter().map(|d| d.eval(x, t)).collect(), de.eval(x, t))),
            length_scale,
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn length_scale(&self) -> f64 {
        self.length_scale
    }

    pub fn value(&self, x: &[f64], t: f64) -> f64 {
        (self.level)(x, t)
    }

    /// `(grad S, S_t)` at any point of the space-time box.
    pub fn gradient(&self, x: &[f64], t: f64) -> (Vec<f64>, f64) {
        match &self.grad {
            GradMode::Analytic(g) => g(x, t),
            GradMode::CentralDifference { h } => {
                let h = *h;
                let mut xp = x.to_vec();
                let mut g = vec![0.0; self.dim];
                for k in 0..self.dim {
                    let x0 = xp[k];
                    xp[k] = x0 + h;
                    let fp = (self.level)(&xp, t);
                    xp[k] = x0 - h;
                    let fm = (self.level)(&xp, t);
                    xp[k] = x0;
                    g[k] = (fp - fm) / (2.0 * h);
                }
                let st = ((self.level)(x, t + h) - (self.level)(x, t - h)) / (2.0 * h);
                (g, st)
            }
        }
    }

    fn check_point(&self, x: &[f64], t: f64) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        ensure_finite("point", x)?;
        ensure_finite("time", &[t])
    }

    /// Validate that `(x, t)` lies on the front, applying one Newton step
    /// along `grad S` for points within the near-surface band. Returns the
    /// (possibly projected) point.
    pub fn project(&self, x: &[f64], t: f64) -> Result<Vec<f64>> {
        self.check_point(x, t)?;
        let (g, _) = self.gradient(x, t);
        let gn = norm(&g);
        if gn < tolerances::DEGENERATE_GRADIENT {
            return Err(Error::DegenerateGradient(gn));
        }
        let s = self.value(x, t);
        let dist = s.abs() / gn;
        let tol = tolerances::ON_SURFACE * self.length_scale;
        if dist <= tol {
            return Ok(x.to_vec());
        }
        if dist > tolerances::NEAR_SURFACE * self.length_scale {
            return Err(Error::OffSurface(dist));
        }
        let y: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - s * gi / (gn * gn)).collect();
        let (g2, _) = self.gradient(&y, t);
        let d2 = self.value(&y, t).abs() / norm(&g2);
        if d2 <= tol {
            Ok(y)
        } else {
            Err(Error::OffSurface(d2))
        }
    }

    /// Unit normal of the level set through `x` (no on-surface check).
    pub fn normal_field(&self, x: &[f64], t: f64) -> Result<Vec<f64>> {
        let (g, _) = self.gradient(x, t);
        let gn = norm(&g);
        if gn < tolerances::DEGENERATE_GRADIENT {
            return Err(Error::DegenerateGradient(gn));
        }
        Ok(scale(&g, 1.0 / gn))
    }

    /// `(nu, G)` of the level set through `x` (no on-surface check).
    pub fn kinematics(&self, x: &[f64], t: f64) -> Result<(Vec<f64>, f64)> {
        let (g, st) = self.gradient(x, t);
        let gn = norm(&g);
        if gn < tolerances::DEGENERATE_GRADIENT {
            return Err(Error::DegenerateGradient(gn));
        }
        Ok((scale(&g, 1.0 / gn), -st / gn))
    }

    /// Curvature finite-difference step.
    pub fn h_curv(&self) -> f64 {
        tolerances::H_CURV * self.length_scale
    }

    /// `div(nu)` of the normal field by second-order central differences.
    pub fn normal_divergence(&self, x: &[f64], t: f64, h: f64) -> Result<f64> {
        let mut y = x.to_vec();
        let mut div = 0.0;
        for k in 0..self.dim {
            let x0 = y[k];
            y[k] = x0 + h;
            let np = self.normal_field(&y, t)?;
            y[k] = x0 - h;
            let nm = self.normal_field(&y, t)?;
            y[k] = x0;
            div += (np[k] - nm[k]) / (2.0 * h);
        }
        Ok(div)
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        Err(Error::InvalidDimension("front dimension must be at least 1".into()))
    } else {
        Ok(())
    }
}

fn unit(v: &[f64]) -> Result<Vec<f64>> {
    ensure_finite("normal", v)?;
    let n = norm(v);
    if v.is_empty() {
        return Err(Error::InvalidDimension("empty normal".into()));
    }
    if n < tolerances::DEGENERATE_GRADIENT {
        return Err(Error::DegenerateGradient(n));
    }
    Ok(scale(v, 1.0 / n))
}

pub(crate) fn dist(x: &[f64], c: &[f64]) -> f64 {
    x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// Unit normal `nu = grad S / |grad S|` at a point of the front.
pub fn normal(front: &LevelSetFront, x: &[f64], t: f64) -> Result<Vec<f64>> {
    let y = front.project(x, t)?;
    front.normal_field(&y, t)
}

/// Normal speed `G = -S_t / |grad S|`.
pub fn normal_speed(front: &LevelSetFront, x: &[f64], t: f64) -> Result<f64> {
    let y = front.project(x, t)?;
    Ok(front.kinematics(&y, t)?.1)
}

/// Delta-shock velocity `U_delta = G nu = -S_t grad S / |grad S|^2`.
pub fn delta_shock_velocity(front: &LevelSetFront, x: &[f64], t: f64) -> Result<Vec<f64>> {
    let y = front.project(x, t)?;
    let (nu, g) = front.kinematics(&y, t)?;
    Ok(scale(&nu, g))
}

/// Mean curvature `K = -div(nu) / 2` by central differences with step
/// `h_curv = 1e-4 * length_scale`.
pub fn mean_curvature(front: &LevelSetFront, x: &[f64], t: f64) -> Result<f64> {
    let y = front.project(x, t)?;
    Ok(-0.5 * front.normal_divergence(&y, t, front.h_curv())?)
}

/// Mean curvature with an explicit difference step.
pub fn mean_curvature_with_step(front: &LevelSetFront, x: &[f64], t: f64, h: f64) -> Result<f64> {
    let y = front.project(x, t)?;
    Ok(-0.5 * front.normal_divergence(&y, t, h)?)
}

fn eval_checked(f: ScalarField<'_>, x: &[f64], t: f64) -> Result<f64> {
    let v = f(x, t);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Stencil(format!("extension is not finite at x={x:?}, t={t}")))
    }
}

/// `delta f / delta t = f_t + G df/dnu` from a smooth extension `f`, by
/// central differences with step `h` in time and along the normal.
pub fn delta_derivative_time(f: ScalarField<'_>, front: &LevelSetFront, x: &[f64], t: f64, h: f64) -> Result<f64> {
    let y = front.project(x, t)?;
    delta_time_unchecked(f, front, &y, t, h)
}

pub(crate) fn delta_time_unchecked(f: ScalarField<'_>, front: &LevelSetFront, y: &[f64], t: f64, h: f64) -> Result<f64> {
    let (nu, g) = front.kinematics(y, t)?;
    let ft = (eval_checked(f, y, t + h)? - eval_checked(f, y, t - h)?) / (2.0 * h);
    let yp: Vec<f64> = y.iter().zip(&nu).map(|(a, b)| a + h * b).collect();
    let ym: Vec<f64> = y.iter().zip(&nu).map(|(a, b)| a - h * b).collect();
    let fnu = (eval_checked(f, &yp, t)? - eval_checked(f, &ym, t)?) / (2.0 * h);
    Ok(ft + g * fnu)
}

/// `delta f / delta t` from known partial derivatives of the extension.
pub fn delta_derivative_time_exact(front: &LevelSetFront, x: &[f64], t: f64, f_t: f64, grad_f: &[f64]) -> Result<f64> {
    let (nu, g) = front.kinematics(x, t)?;
    Ok(f_t + g * dot(&nu, grad_f))
}

/// Tangential gradient `(delta f / delta x_j)_j = grad f - nu (nu . grad f)`.
pub fn tangential_gradient(f: ScalarField<'_>, front: &LevelSetFront, x: &[f64], t: f64, h: f64) -> Result<Vec<f64>> {
    let y = front.project(x, t)?;
    let nu = front.normal_field(&y, t)?;
    let mut grad = vec![0.0; y.len()];
    let mut z = y.clone();
    for k in 0..y.len() {
        let z0 = z[k];
        z[k] = z0 + h;
        let fp = eval_checked(f, &z, t)?;
        z[k] = z0 - h;
        let fm = eval_checked(f, &z, t)?;
        z[k] = z0;
        grad[k] = (fp - fm) / (2.0 * h);
    }
    let gn = dot(&nu, &grad);
    Ok(grad.iter().zip(&nu).map(|(g, n)| g - n * gn).collect())
}

/// Surface divergence `sum_j delta A_j / delta x_j = tr(J) - nu . J nu`,
/// with `J_ij = dA_i/dx_j` by central differences.
pub fn tangential_divergence(a: VectorField<'_>, front: &LevelSetFront, x: &[f64], t: f64, h: f64) -> Result<f64> {
    let y = front.project(x, t)?;
    tangential_divergence_unchecked(a, front, &y, t, h)
}

pub(crate) fn tangential_divergence_unchecked(a: VectorField<'_>, front: &LevelSetFront, y: &[f64], t: f64, h: f64) -> Result<f64> {
    let n = y.len();
    let nu = front.normal_field(y, t)?;
    let mut jac = vec![0.0; n * n];
    let mut z = y.to_vec();
    for j in 0..n {
        let z0 = z[j];
        z[j] = z0 + h;
        let ap = a(&z, t);
        z[j] = z0 - h;
        let am = a(&z, t);
        z[j] = z0;
        if ap.len() != n || am.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: ap.len() });
        }
        if !ap.iter().chain(&am).all(|v| v.is_finite()) {
            return Err(Error::Stencil("vector field not finite on stencil".into()));
        }
        for i in 0..n {
            jac[i * n + j] = (ap[i] - am[i]) / (2.0 * h);
        }
    }
    let trace: f64 = (0..n).map(|i| jac[i * n + i]).sum();
    let mut njn = 0.0;
    for i in 0..n {
        for j in 0..n {
            njn += nu[i] * jac[i * n + j] * nu[j];
        }
    }
    Ok(trace - njn)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn plane_normal_and_speed() {
        let f = LevelSetFront::plane(&[1.0, 0.0, 0.0], 0.0, 0.0).unwrap();
        assert_eq!(normal(&f, &[0.0, 2.0, -1.0], 3.0).unwrap(), vec![1.0, 0.0, 0.0]);
        assert_eq!(normal_speed(&f, &[0.0, 2.0, -1.0], 3.0).unwrap(), 0.0);
        let moving = LevelSetFront::plane(&[1.0, 0.0], 0.0, 0.7).unwrap();
        assert!(close(normal_speed(&moving, &[0.7, 5.0], 1.0).unwrap(), 0.7, 1e-15));
        assert_eq!(delta_shock_velocity(&moving, &[0.7, 5.0], 1.0).unwrap(), vec![0.7, 0.0]);
        assert_eq!(mean_curvature(&f, &[0.0, 0.0, 0.0], 0.0).unwrap(), 0.0);
    }

    #[test]
    fn sphere_normal_curvature_and_speed() {
        let r = 2.0;
        let s = LevelSetFront::sphere(&[0.0, 0.0, 0.0], RadiusLaw::constant(r)).unwrap();
        let nu = normal(&s, &[r, 0.0, 0.0], 0.0).unwrap();
        assert!(close(nu[0], 1.0, 1e-15) && nu[1] == 0.0);
        let k = mean_curvature(&s, &[0.0, r, 0.0], 0.0).unwrap();
        assert!(close(k, -1.0 / r, 1e-8), "{k}");
        let g = LevelSetFront::sphere(&[0.0, 0.0], RadiusLaw::affine(1.0, 0.25)).unwrap();
        assert!(close(normal_speed(&g, &[0.0, 1.5], 2.0).unwrap(), 0.25, 1e-15));
    }

    #[test]
    fn inward_sphere_orientation() {
        // S = -r + phi(t), phi_dot = 0.5, n = 2
        let f = LevelSetFront::inward_sphere(&[0.0, 0.0], RadiusLaw::affine(1.0, 0.5)).unwrap();
        let x = [0.6, 0.8];
        let nu = normal(&f, &x, 0.0).unwrap();
        assert!(close(nu[0], -0.6, 1e-15) && close(nu[1], -0.8, 1e-15));
        assert!(close(normal_speed(&f, &x, 0.0).unwrap(), -0.5, 1e-15));
        let ud = delta_shock_velocity(&f, &x, 0.0).unwrap();
        assert!(close(ud[0], 0.3, 1e-15) && close(ud[1], 0.4, 1e-15));
    }

    #[test]
    fn off_surface_and_degenerate_points() {
        let s = LevelSetFront::sphere(&[0.0, 0.0], RadiusLaw::constant(1.0)).unwrap();
        assert!(matches!(normal(&s, &[2.0, 0.0], 0.0), Err(Error::OffSurface(_))));
        // within the Newton band: projected then accepted
        assert!(normal(&s, &[1.0 + 1e-8, 0.0], 0.0).is_ok());
        let flat = LevelSetFront::from_expr("x1^2", 1, 1.0).unwrap();
        assert!(matches!(normal(&flat, &[0.0], 0.0), Err(Error::DegenerateGradient(_))));
        assert!(matches!(normal(&s, &[1.0], 0.0), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn expression_front_matches_builtin_sphere() {
        let e = LevelSetFront::from_expr("|x| - (1 + t)", 3, 1.0).unwrap();
        let x = [0.0, 0.0, 1.5];
        assert!(close(normal_speed(&e, &x, 0.5).unwrap(), 1.0, 1e-14));
        let k = mean_curvature(&e, &x, 0.5).unwrap();
        assert!(close(k, -1.0 / 1.5, 1e-8));
        let fd = LevelSetFront::from_fn(2, Arc::new(|x: &[f64], t: f64| x[0] - 2.0 * t), 1.0, 1e-5).unwrap();
        assert!(close(normal_speed(&fd, &[2.0, 0.0], 1.0).unwrap(), 2.0, 1e-9));
    }

    #[test]
    fn delta_derivative_examples() {
        let c = 0.8;
        let f = LevelSetFront::plane(&[1.0, 0.0], 0.0, c).unwrap();
        let x = [c * 0.5, 0.3];
        let h = 1e-4;
        let constant = |_: &[f64], _: f64| 4.0;
        assert!(delta_derivative_time(&constant, &f, &x, 0.5, h).unwrap().abs() < 1e-12);
        let time = |_: &[f64], t: f64| t;
        assert!(close(delta_derivative_time(&time, &f, &x, 0.5, h).unwrap(), 1.0, 1e-10));
        let coord = |x: &[f64], _: f64| x[0];
        assert!(close(delta_derivative_time(&coord, &f, &x, 0.5, h).unwrap(), c, 1e-10));
    }

    #[test]
    fn delta_derivative_is_extension_independent() {
        // two extensions agreeing on the sphere |x| = 1 + t/2
        let s = LevelSetFront::sphere(&[0.0, 0.0], RadiusLaw::affine(1.0, 0.5)).unwrap();
        let f1 = |x: &[f64], t: f64| x[0] * t;
        let f2 = |x: &[f64], t: f64| {
            let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
            x[0] * t + (r - 1.0 - 0.5 * t) * (3.0 + x[1])
        };
        let t = 0.4;
        let r = 1.2;
        let x = [r * 0.6, r * 0.8];
        let d1 = delta_derivative_time(&f1, &s, &x, t, 1e-4).unwrap();
        let d2 = delta_derivative_time(&f2, &s, &x, t, 1e-4).unwrap();
        assert!((d1 - d2).abs() < 1e-7, "{d1} vs {d2}");
    }

    #[test]
    fn tangential_operators() {
        let s = LevelSetFront::sphere(&[0.0, 0.0, 0.0], RadiusLaw::constant(1.0)).unwrap();
        let x = [0.0, 0.6, 0.8];
        let f = |x: &[f64], _: f64| x[0] + 2.0 * x[1] - x[2] * x[2];
        let g = tangential_gradient(&f, &s, &x, 0.0, 1e-5).unwrap();
        let nu = normal(&s, &x, 0.0).unwrap();
        assert!(dot(&g, &nu).abs() < 1e-9);
        // div_Gamma(nu) = -2K = (n-1)/R
        let nf = |y: &[f64], _: f64| {
            let r = norm(y);
            y.iter().map(|v| v / r).collect::<Vec<f64>>()
        };
        let d = tangential_divergence(&nf, &s, &x, 0.0, 1e-4).unwrap();
        assert!(close(d, 2.0, 1e-8));
        // constant tangent field on a plane
        let p = LevelSetFront::plane(&[1.0, 0.0], 0.0, 0.0).unwrap();
        let a = |_: &[f64], _: f64| vec![0.0, 3.0];
        assert!(tangential_divergence(&a, &p, &[0.0, 1.0], 0.0, 1e-4).unwrap().abs() < 1e-12);
    }

    #[test]
    fn surface_divergence_of_mass_flux_is_minus_two_kge() {
        // A = e G nu on an expanding sphere R = 1 + t in 3-D, e = 1, G = 1
        let s = LevelSetFront::sphere(&[0.0, 0.0, 0.0], RadiusLaw::affine(1.0, 1.0)).unwrap();
        let t = 0.25;
        let r = 1.25;
        let x = [r, 0.0, 0.0];
        let a = |y: &[f64], _: f64| {
            let n = norm(y);
            y.iter().map(|v| v / n).collect::<Vec<f64>>()
        };
        let d = tangential_divergence(&a, &s, &x, t, 1e-4).unwrap();
        let k = mean_curvature(&s, &x, t).unwrap();
        assert!(close(d, 2.0 / r, 1e-8));
        assert!(close(d, -2.0 * k * 1.0, 1e-8));
        let zero = |_: &[f64], _: f64| vec![0.0; 3];
        assert_eq!(tangential_divergence(&zero, &s, &x, t, 1e-4).unwrap(), 0.0);
    }
}
