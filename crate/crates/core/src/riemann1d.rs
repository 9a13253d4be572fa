//! One-dimensional delta-shock Riemann problem for a generic flux.
//!
//! Left data is the `-` side (`x < phi(t)`), right data the `+` side; the
//! front normal is `+1`.

use crate::error::{ensure_finite, Error, Result};
use crate::fluxes::FluxModel;
use crate::ode::{self, Control, OdeOptions};
use crate::tolerances::QUADRATIC_DEGENERATE;

#[derive(Debug, Clone, PartialEq)]
pub struct RiemannData1D {
    pub rho_l: f64,
    pub rho_r: f64,
    pub u_l: f64,
    pub u_r: f64,
    pub flux: FluxModel,
    /// Initial point mass at `x0`.
    pub e0: f64,
    /// Initial front velocity; required when `e0 > 0`.
    pub u_delta0: Option<f64>,
    pub x0: f64,
}

impl RiemannData1D {
    /// Data without an initial point mass, discontinuity at the origin.
    pub fn new(rho_l: f64, u_l: f64, rho_r: f64, u_r: f64, flux: FluxModel) -> Result<Self> {
        let d = RiemannData1D { rho_l, rho_r, u_l, u_r, flux, e0: 0.0, u_delta0: None, x0: 0.0 };
        d.validate()?;
        Ok(d)
    }

    pub fn with_point_mass(mut self, e0: f64, u_delta0: f64) -> Result<Self> {
        self.e0 = e0;
        self.u_delta0 = Some(u_delta0);
        self.validate()?;
        Ok(self)
    }

    pub fn at(mut self, x0: f64) -> Result<Self> {
        self.x0 = x0;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("Riemann data", &[self.rho_l, self.rho_r, self.u_l, self.u_r, self.e0, self.x0])?;
        if let Some(v) = self.u_delta0 {
            ensure_finite("u_delta0", &[v])?;
        }
        if self.flux.dim() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, got: self.flux.dim() });
        }
        if self.rho_l < 0.0 || self.rho_r < 0.0 {
            return Err(Error::InvalidParameter("densities must be nonnegative".into()));
        }
        if self.e0 < 0.0 {
            return Err(Error::InvalidParameter("e0 must be nonnegative".into()));
        }
        if self.e0 > 0.0 && self.u_delta0.is_none() {
            return Err(Error::InvalidParameter("e0 > 0 requires u_delta0".into()));
        }
        Ok(())
    }

    pub fn jumps(&self) -> Result<Jumps1D> {
        let fl = self.flux.flux(&[self.u_l])?[0];
        let fr = self.flux.flux(&[self.u_r])?[0];
        let nl = self.flux.tensor(&[self.u_l])?[0];
        let nr = self.flux.tensor(&[self.u_r])?[0];
        Ok(Jumps1D {
            rho: self.rho_l - self.rho_r,
            rho_f: self.rho_l * fl - self.rho_r * fr,
            rho_u: self.rho_l * self.u_l - self.rho_r * self.u_r,
            rho_n: self.rho_l * nl - self.rho_r * nr,
        })
    }
}

/// Jumps `left - right` of `rho`, `rho F`, `rho u`, `rho N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jumps1D {
    pub rho: f64,
    pub rho_f: f64,
    pub rho_u: f64,
    pub rho_n: f64,
}

impl Jumps1D {
    /// `de/dt` at front speed `u`.
    pub fn mass_rate(&self, u: f64) -> f64 {
        self.rho_f - self.rho * u
    }

    /// `d(e u_delta)/dt` at front speed `u`.
    pub fn momentum_rate(&self, u: f64) -> f64 {
        self.rho_n - self.rho_u * u
    }

    /// Real roots of `[rho] u^2 - ([rho F] + [rho u]) u + [rho N] = 0`,
    /// ascending, duplicates collapsed. `None` means every `u` is a root.
    pub fn speed_roots(&self) -> Option<Vec<f64>> {
        let a = self.rho;
        let b = -(self.rho_f + self.rho_u);
        let c = self.rho_n;
        let scale = a.abs().max(b.abs()).max(c.abs());
        if scale == 0.0 {
            return None;
        }
        if a.abs() <= QUADRATIC_DEGENERATE * scale {
            if b.abs() <= QUADRATIC_DEGENERATE * scale {
                return Some(vec![]);
            }
            return Some(vec![-c / b]);
        }
        let disc = b * b - 4.0 * a * c;
        if disc < -QUADRATIC_DEGENERATE * b * b {
            return Some(vec![]);
        }
        let sq = disc.max(0.0).sqrt();
        if sq == 0.0 {
            return Some(vec![-b / (2.0 * a)]);
        }
        let q = -0.5 * (b + b.signum() * sq);
        let (r1, r2) = if q == 0.0 { (0.0, 0.0) } else { (q / a, c / q) };
        let mut r = vec![r1.min(r2), r1.max(r2)];
        if (r[1] - r[0]).abs() <= 1e-14 * r[1].abs().max(1.0) {
            r.pop();
        }
        Some(r)
    }
}

/// True iff a classical shock `[rho F] = s[rho]`, `[rho N] = s[rho u]` exists,
/// i.e. `[rho F][rho u] - [rho][rho N] = 0`; for the standard flux this is
/// `rho_l rho_r (u_l - u_r)^2 = 0`.
pub fn classical_shock_feasible(d: &RiemannData1D) -> bool {
    let Ok(j) = d.jumps() else { return false };
    let det = j.rho_f * j.rho_u - j.rho * j.rho_n;
    det.abs() <= 1e-14 * (1.0 + j.rho_f.abs() * j.rho_u.abs() + j.rho.abs() * j.rho_n.abs())
}

fn entropy_band(d: &RiemannData1D, u: f64, slack: f64) -> bool {
    d.u_r - slack <= u && u <= d.u_l + slack
}

/// Selects the entropy-admissible constant front speed for data without an
/// initial point mass.
pub fn entropy_speed(d: &RiemannData1D) -> Result<f64> {
    let j = d.jumps()?;
    let slack = 1e-14 * (1.0 + d.u_l.abs() + d.u_r.abs());
    let roots = match j.speed_roots() {
        Some(r) => r,
        // no jumps at all: the front is a passive marker riding the flow
        None => return Ok(if d.rho_l > 0.0 || d.rho_r == 0.0 { d.u_l } else { d.u_r }),
    };
    let ok: Vec<f64> =
        roots.iter().copied().filter(|&u| entropy_band(d, u, slack) && j.mass_rate(u) >= -slack * (1.0 + j.rho_f.abs())).collect();
    match ok.as_slice() {
        [u] => Ok(*u),
        [a, b] => Err(Error::AmbiguousRoot(*a, *b)),
        _ => Err(Error::NoDeltaShock(format!("roots {roots:?} violate u_r <= u_delta <= u_l (u_l = {}, u_r = {})", d.u_l, d.u_r))),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum PathKind {
    /// `e = e0 + t ([rho F] - [rho] u)`, constant speed.
    Constant { u: f64 },
    /// Standard flux with initial mass: `X = phi - x0` solves a quadratic.
    Standard,
    /// Generic flux with initial mass: scalar ODE for `X`.
    Integrated,
}

/// Front trajectory `phi(t)`, speed `u_delta(t)` and mass `e(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaShockPath1D {
    pub x0: f64,
    pub e0: f64,
    pub u_delta0: f64,
    pub jumps: Jumps1D,
    kind: PathKind,
}

/// State of the front at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathPoint {
    pub t: f64,
    pub phi: f64,
    pub u_delta: f64,
    pub e: f64,
}

impl DeltaShockPath1D {
    /// Displacement `X(t) = phi(t) - x0`.
    fn displacement(&self, t: f64) -> Result<f64> {
        let j = &self.jumps;
        match self.kind {
            PathKind::Constant { u } => Ok(u * t),
            PathKind::Standard => {
                let b = self.e0 + j.rho_u * t;
                let c = self.e0 * self.u_delta0 * t + 0.5 * j.rho_n * t * t;
                let disc = b * b - 2.0 * j.rho * c;
                // disc = e^2; the branch through X(0) = 0 is b - [rho] X = +sqrt(disc)
                if disc < 0.0 {
                    return Err(Error::NoDeltaShock(format!("front mass vanishes before t = {t}")));
                }
                let sq = disc.sqrt();
                if b >= 0.0 {
                    Ok(if b + sq == 0.0 { 0.0 } else { 2.0 * c / (b + sq) })
                } else {
                    Ok((b - sq) / j.rho)
                }
            }
            PathKind::Integrated => {
                if t == 0.0 {
                    return Ok(0.0);
                }
                let (e0, p0) = (self.e0, self.e0 * self.u_delta0);
                let j = *j;
                let opts = OdeOptions { rtol: 1e-12, atol: 1e-14, ..Default::default() };
                let run = ode::solve(
                    |s, y, d| {
                        let e = e0 + j.rho_f * s - j.rho * y[0];
                        if e <= 0.0 {
                            return Err(Error::NoDeltaShock(format!("front mass vanishes at t = {s}")));
                        }
                        d[0] = (p0 + j.rho_n * s - j.rho_u * y[0]) / e;
                        Ok(())
                    },
                    0.0,
                    &[0.0],
                    &[t],
                    &opts,
                    |_, _| Ok(Control::Continue),
                )?;
                Ok(run.samples[run.samples.len() - 1].1[0])
            }
        }
    }

    pub fn at(&self, t: f64) -> Result<PathPoint> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::InvalidParameter(format!("time {t} must be finite and nonnegative")));
        }
        let j = &self.jumps;
        let x = self.displacement(t)?;
        let (e, u) = match self.kind {
            PathKind::Constant { u } => (self.e0 + j.mass_rate(u) * t, u),
            _ => {
                let e = self.e0 + j.rho_f * t - j.rho * x;
                let p = self.e0 * self.u_delta0 + j.rho_n * t - j.rho_u * x;
                (e, p / e)
            }
        };
        Ok(PathPoint { t, phi: self.x0 + x, u_delta: u, e: e.max(0.0) })
    }

    pub fn phi(&self, t: f64) -> Result<f64> {
        Ok(self.at(t)?.phi)
    }

    pub fn u_delta(&self, t: f64) -> Result<f64> {
        Ok(self.at(t)?.u_delta)
    }

    pub fn e(&self, t: f64) -> Result<f64> {
        Ok(self.at(t)?.e)
    }

    /// RH mass and momentum deficits `([rho F] - [rho]u_delta, [rho N] - [rho u]u_delta)`.
    pub fn deficits(&self, t: f64) -> Result<(f64, f64)> {
        let u = self.u_delta(t)?;
        Ok((self.jumps.mass_rate(u), self.jumps.momentum_rate(u)))
    }

    pub fn is_constant_speed(&self) -> bool {
        matches!(self.kind, PathKind::Constant { .. })
    }
}

/// Solves the Riemann problem with constant side states.
pub fn solve_constant_states(d: &RiemannData1D) -> Result<DeltaShockPath1D> {
    d.validate()?;
    let jumps = d.jumps()?;
    if d.e0 == 0.0 {
        let u = entropy_speed(d)?;
        return Ok(DeltaShockPath1D { x0: d.x0, e0: 0.0, u_delta0: u, jumps, kind: PathKind::Constant { u } });
    }
    let u0 = d.u_delta0.unwrap_or_default();
    let slack = 1e-14 * (1.0 + d.u_l.abs() + d.u_r.abs());
    if !entropy_band(d, u0, slack) {
        return Err(Error::NoDeltaShock(format!("initial front speed {u0} outside [{}, {}]", d.u_r, d.u_l)));
    }
    let kind = if d.flux.is_standard() { PathKind::Standard } else { PathKind::Integrated };
    Ok(DeltaShockPath1D { x0: d.x0, e0: d.e0, u_delta0: u0, jumps, kind })
}

/// Regular part and atom of the solution at `(x, t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointValue {
    pub rho: f64,
    pub u: f64,
    /// `(position, mass)` of the point mass; `None` when it carries no mass
    /// at any time.
    pub atom: Option<(f64, f64)>,
}

pub fn evaluate_solution(path: &DeltaShockPath1D, d: &RiemannData1D, x: f64, t: f64) -> Result<PointValue> {
    let p = path.at(t)?;
    let (rho, u) = if x < p.phi { (d.rho_l, d.u_l) } else { (d.rho_r, d.u_r) };
    let massless = path.e0 == 0.0 && path.jumps.mass_rate(p.u_delta) == 0.0 && path.is_constant_speed();
    Ok(PointValue { rho, u, atom: if massless { None } else { Some((p.phi, p.e)) } })
}
