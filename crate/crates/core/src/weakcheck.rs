//! Numerical check of the integral identities that define a delta-shock
//! solution, against batteries of smooth compactly supported test functions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::SurfacePatchQuadrature;
use crate::quadrature::Composite;
use crate::solution::{DeltaShockSolution, FrontSample, FrontShape};
use crate::testfn::{BumpFactor, TestFunction};
use crate::vecops::{axpy, dot, norm, scale, tangent_basis};

/// Space box and time interval (`t >= 0`) for generating test functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceTimeBox {
    pub space: Vec<(f64, f64)>,
    pub time: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestFunctionBattery {
    pub functions: Vec<TestFunction>,
    pub seed: u64,
}

impl TestFunctionBattery {
    pub fn validate(&self) -> Result<()> {
        let Some(first) = self.functions.first() else {
            return Err(Error::InvalidBattery("empty battery".into()));
        };
        let n = first.dim();
        for (i, f) in self.functions.iter().enumerate() {
            if f.dim() != n {
                return Err(Error::InvalidBattery(format!("member {i} has dimension {}", f.dim())));
            }
            let factors = f.space.iter().chain(std::iter::once(&f.time));
            for b in factors {
                let vals = [b.center, b.half, b.linear, b.quadratic];
                if vals.iter().any(|v| !v.is_finite()) || !(b.half > 0.0) {
                    return Err(Error::InvalidBattery(format!("member {i} has a degenerate factor")));
                }
            }
            // members may straddle t = 0 (initial-data terms) but must live in t >= 0
            if f.time.center < 0.0 {
                return Err(Error::InvalidBattery(format!("member {i} is centered at t = {} < 0", f.time.center)));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.functions.first().map_or(0, TestFunction::dim)
    }

    /// Members that are nonnegative and vanish near `t = 0`.
    pub fn nonnegative_interior(&self) -> Vec<&TestFunction> {
        self.functions.iter().filter(|f| f.is_nonnegative() && !f.touches_initial_time()).collect()
    }
}

fn factor(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> BumpFactor {
    let w = hi - lo;
    let half = w * rng.random_range(0.15..0.45);
    let center = rng.random_range(lo + half..=hi - half);
    BumpFactor { center, half, linear: rng.random_range(-1.0..1.0), quadratic: rng.random_range(-1.0..1.0) }
}

/// Deterministic battery. Member 0 is a plain nonnegative bump filling the
/// box away from `t = 0`; member 1 is a plain bump centered at `t = 0` that
/// exercises the initial-data terms; the rest are random polynomial-times-bump
/// products, every third one centered at `t = 0`.
pub fn make_battery(bx: &SpaceTimeBox, count: usize, seed: u64) -> Result<TestFunctionBattery> {
    if count == 0 {
        return Err(Error::InvalidBattery("count must be at least 1".into()));
    }
    let (t_lo, t_hi) = bx.time;
    if !(0.0 <= t_lo && t_lo < t_hi) || bx.space.is_empty() || bx.space.iter().any(|(a, b)| !(a < b)) {
        return Err(Error::InvalidBattery("box must be nonempty with t >= 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let plain_space = || bx.space.iter().map(|&(a, b)| BumpFactor::plain(0.5 * (a + b), 0.5 * (b - a))).collect::<Vec<_>>();
    let mut functions =
        vec![TestFunction { space: plain_space(), time: BumpFactor::plain(0.5 * (t_lo + t_hi), 0.5 * (t_hi - t_lo)), amplitude: 1.0 }];
    if count >= 2 {
        functions.push(TestFunction { space: plain_space(), time: BumpFactor::plain(0.0, t_hi), amplitude: 1.0 });
    }
    for k in 2..count {
        let space = bx.space.iter().map(|&(a, b)| factor(&mut rng, a, b)).collect();
        let time = if k % 3 == 0 {
            let mut f = factor(&mut rng, 0.0, t_hi);
            f.center = 0.0;
            f.half = t_hi * rng.random_range(0.3..0.9);
            f
        } else {
            factor(&mut rng, t_lo, t_hi)
        };
        functions.push(TestFunction { space, time, amplitude: rng.random_range(0.5..2.0) });
    }
    let b = TestFunctionBattery { functions, seed };
    b.validate()?;
    Ok(b)
}

/// Plain nonnegative bumps whose time support stays inside `t > 0`, for
/// inequality checks.
pub fn make_nonnegative_battery(bx: &SpaceTimeBox, count: usize, seed: u64) -> Result<TestFunctionBattery> {
    let mut b = make_battery(bx, count.max(1), seed)?;
    let (t_lo, t_hi) = bx.time;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    for f in b.functions.iter_mut().skip(1) {
        for s in f.space.iter_mut() {
            *s = BumpFactor::plain(s.center, s.half);
        }
        let half = (t_hi - t_lo) * rng.random_range(0.1..0.45);
        let lo = t_lo.max(0.05 * (t_hi - t_lo));
        f.time = BumpFactor::plain(rng.random_range(lo + half..=t_hi - half), half);
        f.amplitude = f.amplitude.abs();
    }
    b.validate()?;
    Ok(b)
}

/// `points`-point Gauss-Legendre on `panels` panels per smooth segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadratureLevel {
    pub points: usize,
    pub panels: usize,
}

/// `count` levels of `points`-point rules on 2, 4, 8, ... panels.
pub fn levels(points: usize, count: usize) -> Vec<QuadratureLevel> {
    (1..=count.max(1)).map(|k| QuadratureLevel { points, panels: 1 << k }).collect()
}

/// Six levels of 4-point rules, 2 to 64 panels. The coarse end is
/// deliberately under-resolved so the refinement table shows convergence.
pub fn default_levels(count: usize) -> Vec<QuadratureLevel> {
    levels(4, count)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelResidual {
    pub level: QuadratureLevel,
    /// Max over the battery of `|residual|` for mass then each momentum component.
    pub max_abs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakResidual {
    pub levels: Vec<LevelResidual>,
    /// Finest-level maxima, length `1 + n`.
    pub finest: Vec<f64>,
    /// Finest-level signed residuals per battery member.
    pub per_member: Vec<Vec<f64>>,
    /// `log2` ratio of the last pair of successive overall maxima whose
    /// coarser member is above round-off; `None` when every level is at
    /// round-off.
    pub observed_order: Option<f64>,
}

impl WeakResidual {
    pub fn max_finest(&self) -> f64 {
        self.finest.iter().fold(0.0, |a, b| a.max(*b))
    }

    /// True when the overall maxima never increase with refinement (within
    /// the round-off floor).
    pub fn monotone(&self) -> bool {
        let m: Vec<f64> = self.levels.iter().map(|l| l.max_abs.iter().fold(0.0f64, |a, b| a.max(*b))).collect();
        m.windows(2).all(|w| w[1] <= w[0] || w[1] < ROUND_OFF)
    }
}

const ROUND_OFF: f64 = 1e-12;

/// Adds `w * (rho (phi_t + F.grad phi), rho U_k phi_t + rho N_k.grad phi)`.
fn volume_term(
    sol: &dyn DeltaShockSolution,
    x: &[f64],
    t: f64,
    front: &FrontSample,
    phi: &TestFunction,
    w: f64,
    acc: &mut [f64],
) -> Result<()> {
    let (v, grad, dt) = phi.eval_all(x, t);
    if v == 0.0 && dt == 0.0 && grad.iter().all(|g| *g == 0.0) {
        return Ok(());
    }
    let (rho, u) = sol.state_near(x, t, front)?;
    if rho == 0.0 {
        return Ok(());
    }
    let flux = sol.flux();
    let n = x.len();
    acc[0] += w * rho * (dt + flux.flux_dot(&u, &grad)?);
    let nt = flux.tensor_dot(&u, &grad)?;
    for k in 0..n {
        acc[1 + k] += w * rho * (u[k] * dt + nt[k]);
    }
    Ok(())
}

/// Adds `w e (1, U_delta) dphi/dt` at a front point with normal `nu` and
/// normal speed `g`.
#[allow(clippy::too_many_arguments)]
fn surface_term(x: &[f64], t: f64, nu: &[f64], g: f64, e: f64, phi: &TestFunction, w: f64, acc: &mut [f64]) {
    let (_, grad, dt) = phi.eval_all(x, t);
    let dd = dt + g * dot(nu, &grad);
    acc[0] += w * e * dd;
    for k in 0..x.len() {
        acc[1 + k] += w * e * g * nu[k] * dd;
    }
}

/// Adds `w rho0 (1, U0) phi(x, 0)`.
fn initial_volume_term(
    sol: &dyn DeltaShockSolution,
    x: &[f64],
    front: &FrontSample,
    phi: &TestFunction,
    w: f64,
    acc: &mut [f64],
) -> Result<()> {
    let v = phi.value(x, 0.0);
    if v == 0.0 {
        return Ok(());
    }
    let (rho, u) = sol.state_near(x, 0.0, front)?;
    acc[0] += w * rho * v;
    for k in 0..x.len() {
        acc[1 + k] += w * rho * u[k] * v;
    }
    Ok(())
}

fn initial_surface_term(x: &[f64], nu: &[f64], g: f64, e: f64, phi: &TestFunction, w: f64, acc: &mut [f64]) {
    let v = phi.value(x, 0.0);
    acc[0] += w * e * v;
    for k in 0..x.len() {
        acc[1 + k] += w * e * g * nu[k] * v;
    }
}

/// Tensor Gauss nodes on a box; a single empty node for zero dimensions.
fn box_rule(ranges: &[(f64, f64)], rule: &Composite) -> Vec<(Vec<f64>, f64)> {
    let mut out = vec![(Vec::new(), 1.0)];
    for &(a, b) in ranges {
        let nodes = rule.nodes(a, b, &[]);
        let mut next = Vec::with_capacity(out.len() * nodes.len());
        for (p, w) in &out {
            for &(y, wy) in &nodes {
                let mut q = p.clone();
                q.push(y);
                next.push((q, w * wy));
            }
        }
        out = next;
    }
    out
}

fn corners(bx: &[(f64, f64)]) -> Vec<Vec<f64>> {
    let n = bx.len();
    (0..1usize << n).map(|mask| (0..n).map(|k| if mask >> k & 1 == 1 { bx[k].1 } else { bx[k].0 }).collect()).collect()
}

fn planar_residual(sol: &dyn DeltaShockSolution, normal: &[f64], phi: &TestFunction, level: QuadratureLevel) -> Result<Vec<f64>> {
    let n = normal.len();
    let rule = Composite::new(level.points, level.panels);
    let tangents = tangent_basis(normal);
    let cs = corners(&phi.space_box());
    let range = |d: &[f64]| cs.iter().map(|c| dot(c, d)).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let (s_lo, s_hi) = range(normal);
    let y_ranges: Vec<(f64, f64)> = tangents.iter().map(|tau| range(tau)).collect();
    let tangential = box_rule(&y_ranges, &rule);
    let point = |s: f64, y: &[f64]| {
        let mut x = scale(normal, s);
        for (tau, yk) in tangents.iter().zip(y) {
            x = axpy(*yk, tau, &x);
        }
        x
    };
    let mut acc = vec![0.0; 1 + n];
    let (t_lo, t_hi) = phi.time_range();
    let slice = |t: f64, acc: &mut [f64], initial: bool| -> Result<()> {
        let front = sol.front(t)?;
        let breaks = sol.breakpoints(t)?;
        for (s, ws) in rule.nodes(s_lo, s_hi, &breaks) {
            for (y, wy) in &tangential {
                let x = point(s, y);
                if initial {
                    initial_volume_term(sol, &x, &front, phi, ws * wy, acc)?;
                } else {
                    volume_term(sol, &x, t, &front, phi, ws * wy, acc)?;
                }
            }
        }
        if front.position >= s_lo && front.position <= s_hi {
            for (y, wy) in &tangential {
                let x = point(front.position, y);
                if initial {
                    initial_surface_term(&x, normal, front.speed, front.e, phi, *wy, acc);
                } else {
                    surface_term(&x, t, normal, front.speed, front.e, phi, *wy, acc);
                }
            }
        }
        Ok(())
    };
    for (t, wt) in rule.nodes(t_lo, t_hi, &[]) {
        let mut local = vec![0.0; 1 + n];
        slice(t, &mut local, false)?;
        for k in 0..=n {
            acc[k] += wt * local[k];
        }
    }
    if phi.touches_initial_time() {
        slice(0.0, &mut acc, true)?;
    }
    Ok(acc)
}

fn spherical_residual(sol: &dyn DeltaShockSolution, center: &[f64], phi: &TestFunction, level: QuadratureLevel) -> Result<Vec<f64>> {
    let n = center.len();
    if !(2..=3).contains(&n) {
        return Err(Error::UnsupportedFront(format!("spherical weak check in dimension {n}")));
    }
    let rule = Composite::new(level.points, level.panels);
    let angular = SurfacePatchQuadrature::sphere(&vec![0.0; n], 1.0, level.points * level.panels)?;
    let r_max = corners(&phi.space_box()).iter().map(|c| norm(&crate::vecops::sub(c, center))).fold(0.0, f64::max);
    let mut acc = vec![0.0; 1 + n];
    let (t_lo, t_hi) = phi.time_range();
    let slice = |t: f64, acc: &mut [f64], initial: bool| -> Result<()> {
        let front = sol.front(t)?;
        let breaks = sol.breakpoints(t)?;
        for (r, wr) in rule.nodes(0.0, r_max, &breaks) {
            let jac = wr * r.powi(n as i32 - 1);
            for (dir, wa) in angular.nodes.iter().zip(&angular.weights) {
                let x = axpy(r, dir, center);
                if initial {
                    initial_volume_term(sol, &x, &front, phi, jac * wa, acc)?;
                } else {
                    volume_term(sol, &x, t, &front, phi, jac * wa, acc)?;
                }
            }
        }
        let rho_front = front.position;
        if rho_front > 0.0 && rho_front <= r_max {
            let jac = rho_front.powi(n as i32 - 1);
            for (dir, wa) in angular.nodes.iter().zip(&angular.weights) {
                let x = axpy(rho_front, dir, center);
                let nu = scale(dir, -1.0);
                let g = -front.speed;
                if initial {
                    initial_surface_term(&x, &nu, g, front.e, phi, jac * wa, acc);
                } else {
                    surface_term(&x, t, &nu, g, front.e, phi, jac * wa, acc);
                }
            }
        }
        Ok(())
    };
    for (t, wt) in rule.nodes(t_lo, t_hi, &[]) {
        let mut local = vec![0.0; 1 + n];
        slice(t, &mut local, false)?;
        for k in 0..=n {
            acc[k] += wt * local[k];
        }
    }
    if phi.touches_initial_time() {
        slice(0.0, &mut acc, true)?;
    }
    Ok(acc)
}

/// Signed residuals `(mass, momentum_1..n)` of one test function.
pub fn member_residual(sol: &dyn DeltaShockSolution, phi: &TestFunction, level: QuadratureLevel) -> Result<Vec<f64>> {
    if phi.dim() != sol.dim() {
        return Err(Error::DimensionMismatch { expected: sol.dim(), got: phi.dim() });
    }
    match sol.shape() {
        FrontShape::Plane { normal } => planar_residual(sol, &normal, phi, level),
        FrontShape::Sphere { center } => spherical_residual(sol, &center, phi, level),
    }
}

/// Evaluates every identity on every battery member at each level.
pub fn evaluate_identities(
    sol: &dyn DeltaShockSolution,
    battery: &TestFunctionBattery,
    levels: &[QuadratureLevel],
) -> Result<WeakResidual> {
    battery.validate()?;
    if levels.is_empty() {
        return Err(Error::InvalidParameter("no quadrature levels".into()));
    }
    let n = sol.dim();
    let mut out = Vec::with_capacity(levels.len());
    let mut per_member = Vec::new();
    for &level in levels {
        let members: Vec<Vec<f64>> = battery.functions.par_iter().map(|f| member_residual(sol, f, level)).collect::<Result<_>>()?;
        let mut max_abs = vec![0.0f64; 1 + n];
        for m in &members {
            for k in 0..=n {
                max_abs[k] = max_abs[k].max(m[k].abs());
            }
        }
        out.push(LevelResidual { level, max_abs });
        per_member = members;
    }
    let overall: Vec<f64> = out.iter().map(|l| l.max_abs.iter().fold(0.0f64, |a, b| a.max(*b))).collect();
    let observed_order = overall.windows(2).filter(|w| w[0] > ROUND_OFF).map(|w| (w[0] / w[1].max(1e-16)).log2()).next_back();
    Ok(WeakResidual { finest: out[out.len() - 1].max_abs.clone(), levels: out, per_member, observed_order })
}
