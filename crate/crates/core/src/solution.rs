//! Candidate delta-shock solutions as analytic field providers: a regular
//! part on each side of the front plus a uniform surface density on it.

use crate::error::{Error, Result};
use crate::fluxes::{standard_flux, FluxModel};
use crate::ode::OdeOptions;
use crate::rh::{FrontState, SideStates};
use crate::riemann1d::{solve_constant_states, DeltaShockPath1D, RiemannData1D};
use crate::spherical::{front_rates, integrate_front, FrontOptions, RadialField, SphericalFrontState, StopReason};
use crate::vecops::{dot, norm, scale};

/// Front families with a closed-form chart.
#[derive(Debug, Clone, PartialEq)]
pub enum FrontShape {
    /// `{x . normal = position(t)}`; the `-` side is `x . normal < position`.
    Plane { normal: Vec<f64> },
    /// `{|x - center| = position(t)}` with the inward normal; the `-` side is
    /// the exterior.
    Sphere { center: Vec<f64> },
}

/// Front position, its rate and the surface density at one time. For planes
/// `speed` is the normal speed `G`; for spheres it is the radial rate and
/// `G = -speed`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontSample {
    pub position: f64,
    pub speed: f64,
    pub e: f64,
}

pub trait DeltaShockSolution: Send + Sync {
    fn dim(&self) -> usize;
    fn flux(&self) -> &FluxModel;
    fn shape(&self) -> FrontShape;
    fn front(&self, t: f64) -> Result<FrontSample>;
    /// Regular part `(rho, U)` at `(x, t)`.
    fn state(&self, x: &[f64], t: f64) -> Result<(f64, Vec<f64>)>;
    /// Interval (along the normal for planes, in radius for spheres) that
    /// contains the support of the regular part at time `t`, if bounded.
    fn support(&self, t: f64) -> Option<(f64, f64)>;
    /// `state` with the front at time `t` already evaluated.
    fn state_near(&self, x: &[f64], t: f64, _front: &FrontSample) -> Result<(f64, Vec<f64>)> {
        self.state(x, t)
    }

    /// Side limits and front kinematics at a point of the front.
    fn jump_data(&self, x: &[f64], t: f64) -> Result<(SideStates, FrontState)>;

    /// Positions where the regular part may jump along the front-normal
    /// coordinate at time `t`.
    fn breakpoints(&self, t: f64) -> Result<Vec<f64>> {
        let mut b = vec![self.front(t)?.position];
        if let Some((lo, hi)) = self.support(t) {
            b.push(lo);
            b.push(hi);
        }
        Ok(b)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlanarFront {
    Path(DeltaShockPath1D),
    /// `position = x0 + speed t`, `e = e0 + rate t`.
    Affine {
        x0: f64,
        speed: f64,
        e0: f64,
        rate: f64,
    },
}

/// Piecewise-constant states separated by a moving plane.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarSolution {
    pub flux: FluxModel,
    pub normal: Vec<f64>,
    pub minus: (f64, Vec<f64>),
    pub plus: (f64, Vec<f64>),
    pub front: PlanarFront,
    /// Initial support `[lo, hi]` along the normal; each edge moves with the
    /// normal velocity of its side.
    pub support0: Option<(f64, f64)>,
}

impl PlanarSolution {
    /// One-dimensional solution from solved Riemann data.
    pub fn from_riemann(d: &RiemannData1D, path: DeltaShockPath1D) -> Self {
        PlanarSolution {
            flux: d.flux.clone(),
            normal: vec![1.0],
            minus: (d.rho_l, vec![d.u_l]),
            plus: (d.rho_r, vec![d.u_r]),
            front: PlanarFront::Path(path),
            support0: None,
        }
    }

    pub fn solve_riemann(d: &RiemannData1D) -> Result<Self> {
        Ok(Self::from_riemann(d, solve_constant_states(d)?))
    }

    /// A weak solution that violates the entropy condition: two unit-density
    /// streams moving apart out of a resting point mass `e = 2 t0 - 2t`.
    pub fn time_reversed(t0: f64) -> Result<Self> {
        Ok(PlanarSolution {
            flux: standard_flux(1)?,
            normal: vec![1.0],
            minus: (1.0, vec![-1.0]),
            plus: (1.0, vec![1.0]),
            front: PlanarFront::Affine { x0: 0.0, speed: 0.0, e0: 2.0 * t0, rate: -2.0 },
            support0: None,
        })
    }

    pub fn with_support(mut self, lo: f64, hi: f64) -> Result<Self> {
        let p = self.front_sample(0.0)?.position;
        if !(lo < p && p < hi) {
            return Err(Error::InvalidParameter(format!("support [{lo}, {hi}] must contain the front")));
        }
        self.support0 = Some((lo, hi));
        Ok(self)
    }

    /// The same states with a constant-speed front moved off by `du`; the
    /// surface density keeps its initial value and rate.
    pub fn perturbed(&self, du: f64) -> Result<Self> {
        let f0 = self.front_sample(0.0)?;
        let f1 = self.front_sample(1.0)?;
        let mut out = self.clone();
        out.front = PlanarFront::Affine { x0: f0.position, speed: f0.speed + du, e0: f0.e, rate: f1.e - f0.e };
        Ok(out)
    }

    fn front_sample(&self, t: f64) -> Result<FrontSample> {
        match &self.front {
            PlanarFront::Path(p) => {
                let s = p.at(t)?;
                Ok(FrontSample { position: s.phi, speed: s.u_delta, e: s.e })
            }
            PlanarFront::Affine { x0, speed, e0, rate } => Ok(FrontSample { position: x0 + speed * t, speed: *speed, e: e0 + rate * t }),
        }
    }

    /// Support edges are carried by the transport velocity `F(U)`.
    fn edges(&self, t: f64) -> Option<(f64, f64)> {
        self.support0.map(|(lo, hi)| {
            (
                lo + t * dot(&self.flux.flux_unchecked(&self.minus.1), &self.normal),
                hi + t * dot(&self.flux.flux_unchecked(&self.plus.1), &self.normal),
            )
        })
    }

    fn sides(&self) -> Result<SideStates> {
        SideStates::new(self.minus.0, self.minus.1.clone(), self.plus.0, self.plus.1.clone())
    }
}

impl DeltaShockSolution for PlanarSolution {
    fn dim(&self) -> usize {
        self.normal.len()
    }

    fn flux(&self) -> &FluxModel {
        &self.flux
    }

    fn shape(&self) -> FrontShape {
        FrontShape::Plane { normal: self.normal.clone() }
    }

    fn front(&self, t: f64) -> Result<FrontSample> {
        self.front_sample(t)
    }

    fn state(&self, x: &[f64], t: f64) -> Result<(f64, Vec<f64>)> {
        let f = self.front_sample(t)?;
        self.state_near(x, t, &f)
    }

    fn state_near(&self, x: &[f64], t: f64, front: &FrontSample) -> Result<(f64, Vec<f64>)> {
        let s = dot(x, &self.normal);
        let p = front.position;
        let (side, outside) = if s < p {
            (&self.minus, self.edges(t).is_some_and(|(lo, _)| s < lo))
        } else {
            (&self.plus, self.edges(t).is_some_and(|(_, hi)| s > hi))
        };
        Ok((if outside { 0.0 } else { side.0 }, side.1.clone()))
    }

    fn support(&self, t: f64) -> Option<(f64, f64)> {
        self.edges(t)
    }

    fn jump_data(&self, _x: &[f64], t: f64) -> Result<(SideStates, FrontState)> {
        let f = self.front_sample(t)?;
        Ok((self.sides()?, FrontState::new(f.e.max(0.0), self.normal.clone(), f.speed, 0.0)?))
    }
}

/// Spherically symmetric solution centered at the origin, `n >= 2`, with the
/// front interpolated from a densely sampled trajectory.
#[derive(Debug, Clone)]
pub struct SphericalSolution {
    pub inner: RadialField,
    pub outer: RadialField,
    pub n: usize,
    flux: FluxModel,
    /// `(t, phi, phi_dot, e, e_dot)`
    knots: Vec<[f64; 5]>,
    support: Option<(f64, f64)>,
}

impl SphericalSolution {
    pub fn integrate(
        inner: RadialField,
        outer: RadialField,
        n: usize,
        init: SphericalFrontState,
        t_end: f64,
        samples: usize,
        ode: OdeOptions,
    ) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidDimension("spherical solutions need n >= 2".into()));
        }
        let opts = FrontOptions { ode, r_min: None, samples };
        let traj = integrate_front(&inner, &outer, init, n, t_end, &opts)?;
        if traj.stop != StopReason::Completed {
            return Err(Error::UnsupportedFront(format!("trajectory stopped early ({:?})", traj.stop)));
        }
        let mut knots = Vec::with_capacity(traj.samples.len());
        for s in &traj.samples {
            let (de, _) = front_rates(&inner, &outer, n, s.t, s.phi, s.e, s.u_delta)?;
            knots.push([s.t, s.phi, s.u_delta, s.e, de]);
        }
        Ok(SphericalSolution { inner, outer, n, flux: standard_flux(n)?, knots, support: None })
    }

    /// Declares the radial interval containing the regular part.
    pub fn with_support(mut self, lo: f64, hi: f64) -> Self {
        self.support = Some((lo, hi));
        self
    }

    pub fn t_range(&self) -> (f64, f64) {
        (self.knots[0][0], self.knots[self.knots.len() - 1][0])
    }

    fn hermite(&self, t: f64) -> Result<FrontSample> {
        let (t0, t1) = self.t_range();
        if t < t0 - 1e-12 || t > t1 + 1e-12 {
            return Err(Error::InvalidParameter(format!("t = {t} outside the integrated range [{t0}, {t1}]")));
        }
        let k = self.knots.partition_point(|q| q[0] <= t).clamp(1, self.knots.len() - 1);
        let (a, b) = (&self.knots[k - 1], &self.knots[k]);
        let h = b[0] - a[0];
        let s = ((t - a[0]) / h).clamp(0.0, 1.0);
        let h00 = 2.0 * s.powi(3) - 3.0 * s * s + 1.0;
        let h10 = s.powi(3) - 2.0 * s * s + s;
        let h01 = -2.0 * s.powi(3) + 3.0 * s * s;
        let h11 = s.powi(3) - s * s;
        let d00 = (6.0 * s * s - 6.0 * s) / h;
        let d10 = 3.0 * s * s - 4.0 * s + 1.0;
        let d01 = (-6.0 * s * s + 6.0 * s) / h;
        let d11 = 3.0 * s * s - 2.0 * s;
        let interp = |i: usize, di: usize| h00 * a[i] + h10 * h * a[di] + h01 * b[i] + h11 * h * b[di];
        let deriv = |i: usize, di: usize| d00 * a[i] + d10 * a[di] + d01 * b[i] + d11 * b[di];
        Ok(FrontSample { position: interp(1, 2), speed: deriv(1, 2), e: interp(3, 4).max(0.0) })
    }
}

impl DeltaShockSolution for SphericalSolution {
    fn dim(&self) -> usize {
        self.n
    }

    fn flux(&self) -> &FluxModel {
        &self.flux
    }

    fn shape(&self) -> FrontShape {
        FrontShape::Sphere { center: vec![0.0; self.n] }
    }

    fn front(&self, t: f64) -> Result<FrontSample> {
        self.hermite(t)
    }

    fn state(&self, x: &[f64], t: f64) -> Result<(f64, Vec<f64>)> {
        let f = self.hermite(t)?;
        self.state_near(x, t, &f)
    }

    fn state_near(&self, x: &[f64], t: f64, front: &FrontSample) -> Result<(f64, Vec<f64>)> {
        let r = norm(x);
        let phi = front.position;
        let field = if r < phi { &self.inner } else { &self.outer };
        let (rho, u) = field.eval(r, t, self.n)?;
        let dir = if r > 0.0 { scale(x, 1.0 / r) } else { vec![0.0; self.n] };
        Ok((rho, scale(&dir, u)))
    }

    fn support(&self, _t: f64) -> Option<(f64, f64)> {
        self.support
    }

    fn breakpoints(&self, t: f64) -> Result<Vec<f64>> {
        let mut b = vec![self.hermite(t)?.position];
        b.extend(self.inner.breakpoints(t));
        b.extend(self.outer.breakpoints(t));
        Ok(b)
    }

    fn jump_data(&self, x: &[f64], t: f64) -> Result<(SideStates, FrontState)> {
        let f = self.hermite(t)?;
        let r = norm(x);
        if r == 0.0 {
            return Err(Error::DegenerateGradient(0.0));
        }
        let dir = scale(x, 1.0 / r);
        let (ro, uo) = self.outer.eval(f.position, t, self.n)?;
        let (ri, ui) = self.inner.eval(f.position, t, self.n)?;
        let sides = SideStates::new(ro, scale(&dir, uo), ri, scale(&dir, ui))?;
        let k = (self.n as f64 - 1.0) / (2.0 * f.position);
        Ok((sides, FrontState::new(f.e, scale(&dir, -1.0), -f.speed, k)?))
    }
}
