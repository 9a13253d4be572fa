//! Global mass, momentum and kinetic-energy functionals of the regular part
//! and of the front, with the conservation and monotonicity checks built on
//! them.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::Composite;
use crate::rh::{deficits, entropy_ok, FrontState, SideStates};
use crate::solution::{DeltaShockSolution, FrontShape};
use crate::spherical::{
    front_rates, mass_audit_spherical, sphere_measure, spherical_entropy, RadialField, RadialFieldSpec, SphericalTrajectory,
};
use crate::testfn::TestFunction;
use crate::vecops::{dot, norm, scale, sub};
use crate::weakcheck::TestFunctionBattery;

/// Functionals at one time. Planar fronts are audited per unit front area
/// along the normal coordinate; spherical ones carry the radial momentum as
/// their single momentum component.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BalanceSample {
    pub t: f64,
    pub mass: f64,
    pub front_mass: f64,
    pub momentum: Vec<f64>,
    pub front_momentum: Vec<f64>,
    pub energy: f64,
    pub front_energy: f64,
    /// `d m / dt` from the jump conditions.
    pub mdot_exact: f64,
    /// `d m / dt` by differences on the sample grid.
    pub mdot: f64,
    pub entropy_ok: bool,
    pub entropy_strict: bool,
    /// Side states differ at the front.
    pub jump: bool,
    /// `int rho |U| + m |U_delta|`, the scale for momentum tolerances.
    pub abs_momentum: f64,
}

impl BalanceSample {
    pub fn sum_mass(&self) -> f64 {
        self.mass + self.front_mass
    }

    pub fn sum_momentum(&self) -> Vec<f64> {
        self.momentum.iter().zip(&self.front_momentum).map(|(a, b)| a + b).collect()
    }

    pub fn sum_energy(&self) -> f64 {
        self.energy + self.front_energy
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremCheck {
    pub name: String,
    pub passed: bool,
    /// Largest violation measure observed (0 when there is nothing to check).
    pub worst: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BalanceReport {
    pub samples: Vec<BalanceSample>,
    /// Differences of `M + m` on the grid.
    pub mass_rate: Vec<f64>,
    /// Differences of `P + p` on the grid, per component.
    pub momentum_rate: Vec<Vec<f64>>,
    /// `(W + w)(t_{k+1}) - (W + w)(t_k)`.
    pub energy_increments: Vec<f64>,
    pub checks: Vec<TheoremCheck>,
}

impl BalanceReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&TheoremCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn momentum_components(&self) -> usize {
        self.samples.first().map_or(0, |s| s.momentum.len())
    }

    pub fn csv_header(&self) -> String {
        let k = self.momentum_components();
        let mut cols = vec!["t".to_string(), "M".into(), "m".into()];
        cols.extend((1..=k).map(|i| format!("P_{i}")));
        cols.extend((1..=k).map(|i| format!("p_{i}")));
        cols.extend(["W".to_string(), "w".into(), "sum_mass".into()]);
        cols.extend((1..=k).map(|i| format!("sum_mom_{i}")));
        cols.extend(["sum_energy".to_string(), "mdot".into(), "entropy_strict".into()]);
        cols.join(",")
    }

    pub fn to_csv(&self) -> String {
        let f = |v: f64| format!("{v:.16e}");
        let mut out = self.csv_header();
        out.push('\n');
        for s in &self.samples {
            let mut row = vec![f(s.t), f(s.mass), f(s.front_mass)];
            row.extend(s.momentum.iter().map(|v| f(*v)));
            row.extend(s.front_momentum.iter().map(|v| f(*v)));
            row.extend([f(s.energy), f(s.front_energy), f(s.sum_mass())]);
            row.extend(s.sum_momentum().into_iter().map(f));
            row.extend([f(s.sum_energy()), f(s.mdot), u8::from(s.entropy_strict).to_string()]);
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct AuditOptions {
    pub tol_cons: f64,
    pub tol_mono: f64,
    pub quadrature: Composite,
    /// Audit interval along the normal (radius for spheres). Defaults to
    /// 1.2 times the hull of the supports over the sampled times.
    pub window: Option<(f64, f64)>,
}

impl Default for AuditOptions {
    fn default() -> Self {
        AuditOptions { tol_cons: 1e-8, tol_mono: 1e-9, quadrature: Composite::new(8, 4), window: None }
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidParameter("no sample times".into()));
    }
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("sample times must be finite, nonnegative and strictly increasing".into()));
    }
    Ok(())
}

fn pick_window(hulls: &[(f64, f64)], given: Option<(f64, f64)>, floor: Option<f64>) -> Result<(f64, f64)> {
    let lo = hulls.iter().map(|h| h.0).fold(f64::INFINITY, f64::min);
    let hi = hulls.iter().map(|h| h.1).fold(f64::NEG_INFINITY, f64::max);
    match given {
        Some((a, b)) => {
            if !(a < lo && hi < b) {
                return Err(Error::AuditInvalid(format!("support [{lo}, {hi}] is not strictly inside the audit window [{a}, {b}]")));
            }
            Ok((a, b))
        }
        None => {
            let (c, h) = (0.5 * (lo + hi), 0.5 * (hi - lo));
            let h = if h > 0.0 { 1.2 * h } else { 1.0 };
            let a = c - h;
            Ok((floor.map_or(a, |f| a.max(f)), c + h))
        }
    }
}

/// Central differences, one-sided at the ends.
pub fn differentiate(t: &[f64], v: &[f64]) -> Vec<f64> {
    let n = t.len();
    if n < 2 {
        return vec![0.0; n];
    }
    (0..n)
        .map(|k| {
            let (a, b) = (k.saturating_sub(1), (k + 1).min(n - 1));
            (v[b] - v[a]) / (t[b] - t[a])
        })
        .collect()
}

fn finish(mut samples: Vec<BalanceSample>, opts: &AuditOptions) -> BalanceReport {
    let t: Vec<f64> = samples.iter().map(|s| s.t).collect();
    let fm: Vec<f64> = samples.iter().map(|s| s.front_mass).collect();
    for (s, d) in samples.iter_mut().zip(differentiate(&t, &fm)) {
        s.mdot = d;
    }
    let sm: Vec<f64> = samples.iter().map(BalanceSample::sum_mass).collect();
    let mass_rate = differentiate(&t, &sm);
    let k = samples[0].momentum.len();
    let momentum_rate: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            let v: Vec<f64> = samples.iter().map(|s| s.momentum[i] + s.front_momentum[i]).collect();
            differentiate(&t, &v)
        })
        .collect();
    let se: Vec<f64> = samples.iter().map(BalanceSample::sum_energy).collect();
    let energy_increments: Vec<f64> = se.windows(2).map(|w| w[1] - w[0]).collect();

    let s0 = &samples[0];
    let mass_scale = s0.sum_mass().abs();
    let mass_worst = sm.iter().map(|v| (v - sm[0]).abs()).fold(0.0, f64::max);
    let p0 = s0.sum_momentum();
    let mut mom_worst = 0.0f64;
    let mut mom_pass = true;
    for (i, p0i) in p0.iter().enumerate() {
        let scale = p0i.abs().max(s0.abs_momentum);
        for s in &samples {
            let d = (s.momentum[i] + s.front_momentum[i] - p0i).abs();
            mom_worst = mom_worst.max(if scale > 0.0 { d / scale } else { d });
            mom_pass &= d <= opts.tol_cons * scale;
        }
    }
    // growth of the front mass is only asserted where the entropy condition
    // is strict and the sides actually differ
    let mdot_worst = samples.iter().filter(|s| s.entropy_strict && s.jump).map(|s| -s.mdot_exact).fold(f64::NEG_INFINITY, f64::max);
    let slack = opts.tol_mono * se[0].abs().max(1.0);
    let w: Vec<f64> = samples.iter().map(|s| s.energy).collect();
    let rise = |v: &[f64]| v.windows(2).map(|p| p[1] - p[0]).fold(f64::NEG_INFINITY, f64::max);
    let (e_rise, w_rise) = (rise(&se), rise(&w));
    let checks = vec![
        TheoremCheck {
            name: "mass_conservation".into(),
            passed: mass_worst <= opts.tol_cons * mass_scale,
            worst: if mass_scale > 0.0 { mass_worst / mass_scale } else { mass_worst },
            tolerance: opts.tol_cons,
        },
        TheoremCheck { name: "momentum_conservation".into(), passed: mom_pass, worst: mom_worst, tolerance: opts.tol_cons },
        TheoremCheck { name: "front_mass_growth".into(), passed: !(mdot_worst >= 0.0), worst: mdot_worst.max(0.0), tolerance: 0.0 },
        TheoremCheck { name: "total_energy_nonincreasing".into(), passed: !(e_rise > slack), worst: e_rise.max(0.0), tolerance: slack },
        TheoremCheck { name: "regular_energy_nonincreasing".into(), passed: !(w_rise > slack), worst: w_rise.max(0.0), tolerance: slack },
    ];
    BalanceReport { samples, mass_rate, momentum_rate, energy_increments, checks }
}

fn sides_differ(s: &SideStates) -> bool {
    s.rho_minus != s.rho_plus || s.u_minus != s.u_plus
}

/// Audits a solution at the given times. The solution must declare a compact
/// support; planar fronts are audited per unit front area.
pub fn audit(sol: &dyn DeltaShockSolution, times: &[f64], opts: &AuditOptions) -> Result<BalanceReport> {
    check_times(times)?;
    let mut hulls = Vec::with_capacity(times.len());
    for &t in times {
        let Some((lo, hi)) = sol.support(t) else {
            return Err(Error::AuditInvalid("solution is not compactly supported".into()));
        };
        let p = sol.front(t)?.position;
        hulls.push((lo.min(p), hi.max(p)));
    }
    let n = sol.dim();
    let samples = match sol.shape() {
        FrontShape::Plane { normal } => {
            let window = pick_window(&hulls, opts.window, None)?;
            times.iter().map(|&t| planar_sample(sol, &normal, t, window, &opts.quadrature)).collect::<Result<Vec<_>>>()?
        }
        FrontShape::Sphere { center } => {
            let window = pick_window(&hulls, opts.window, Some(0.0))?;
            times.iter().map(|&t| radial_sample(sol, &center, n, t, window, &opts.quadrature)).collect::<Result<Vec<_>>>()?
        }
    };
    Ok(finish(samples, opts))
}

fn planar_sample(sol: &dyn DeltaShockSolution, normal: &[f64], t: f64, (a, b): (f64, f64), quad: &Composite) -> Result<BalanceSample> {
    let n = normal.len();
    let front = sol.front(t)?;
    let breaks = sol.breakpoints(t)?;
    let (mut mass, mut energy, mut abs_p) = (0.0, 0.0, 0.0);
    let mut momentum = vec![0.0; n];
    for (s, w) in quad.nodes(a, b, &breaks) {
        let (rho, u) = sol.state_near(&scale(normal, s), t, &front)?;
        mass += w * rho;
        energy += 0.5 * w * rho * dot(&u, &u);
        abs_p += w * rho * norm(&u);
        for k in 0..n {
            momentum[k] += w * rho * u[k];
        }
    }
    let (sides, fs) = sol.jump_data(&scale(normal, front.position), t)?;
    let d = deficits(sol.flux(), &sides, &fs)?;
    let (ok, strict) = (entropy_ok(&sides, &fs, false), entropy_ok(&sides, &fs, true));
    Ok(BalanceSample {
        t,
        mass,
        front_mass: front.e,
        front_momentum: scale(&fs.u_delta, front.e),
        momentum,
        energy,
        front_energy: 0.5 * front.e * dot(&fs.u_delta, &fs.u_delta),
        mdot_exact: d.mass,
        mdot: 0.0,
        entropy_ok: ok,
        entropy_strict: strict,
        jump: sides_differ(&sides),
        abs_momentum: abs_p + front.e * norm(&fs.u_delta),
    })
}

fn radial_sample(
    sol: &dyn DeltaShockSolution,
    center: &[f64],
    n: usize,
    t: f64,
    (a, b): (f64, f64),
    quad: &Composite,
) -> Result<BalanceSample> {
    let front = sol.front(t)?;
    let breaks = sol.breakpoints(t)?;
    let area = sphere_measure(n);
    let dir: Vec<f64> = (0..n).map(|k| if k == 0 { 1.0 } else { 0.0 }).collect();
    let (mut mass, mut p, mut energy, mut abs_p) = (0.0, 0.0, 0.0, 0.0);
    for (r, w) in quad.nodes(a, b, &breaks) {
        let x: Vec<f64> = center.iter().zip(&dir).map(|(c, d)| c + r * d).collect();
        let (rho, u) = sol.state_near(&x, t, &front)?;
        let wr = w * area * r.powi(n as i32 - 1) * rho;
        let ur = dot(&u, &dir);
        mass += wr;
        p += wr * ur;
        energy += 0.5 * wr * dot(&u, &u);
        abs_p += wr * norm(&u);
    }
    let phi = front.position;
    let x: Vec<f64> = center.iter().zip(&dir).map(|(c, d)| c + phi * d).collect();
    let (sides, fs) = sol.jump_data(&x, t)?;
    let d = deficits(sol.flux(), &sides, &fs)?;
    let m = area * phi.powi(n as i32 - 1) * front.e;
    Ok(BalanceSample {
        t,
        mass,
        front_mass: m,
        momentum: vec![p],
        front_momentum: vec![m * front.speed],
        energy,
        front_energy: 0.5 * m * front.speed * front.speed,
        mdot_exact: area * phi.powi(n as i32 - 1) * d.mass,
        mdot: 0.0,
        entropy_ok: entropy_ok(&sides, &fs, false),
        entropy_strict: entropy_ok(&sides, &fs, true),
        jump: sides_differ(&sides),
        abs_momentum: abs_p + m * front.speed.abs(),
    })
}

/// Radial support of a field at `t`: `Ok(None)` for vacuum.
fn radial_support(f: &RadialField, t: f64) -> Result<Option<(f64, f64)>> {
    match f.spec() {
        RadialFieldSpec::Constant { rho, .. } if *rho == 0.0 => Ok(None),
        RadialFieldSpec::FreeFlow { support: Some(_), .. } => {
            let b = f.breakpoints(t);
            Ok(Some((b[0].min(b[1]), b[0].max(b[1]))))
        }
        _ => Err(Error::AuditInvalid("field is not compactly supported".into())),
    }
}

/// Audits an integrated radial trajectory (or a planar one for `n = 1`).
/// Conservation tolerances default to the looser ODE level when `opts` is
/// left at its default.
pub fn audit_trajectory(
    traj: &SphericalTrajectory,
    inner: &RadialField,
    outer: &RadialField,
    opts: &AuditOptions,
) -> Result<BalanceReport> {
    let n = traj.n;
    let times: Vec<f64> = traj.samples.iter().map(|s| s.t).collect();
    check_times(&times)?;
    let mut hulls = Vec::with_capacity(times.len());
    for s in &traj.samples {
        let mut h = (s.phi, s.phi);
        for f in [inner, outer] {
            if let Some((a, b)) = radial_support(f, s.t)? {
                h = (h.0.min(a), h.1.max(b));
            }
        }
        hulls.push(h);
    }
    let window = pick_window(&hulls, opts.window, (n >= 2).then_some(0.0))?;
    let rows = mass_audit_spherical(traj, inner, outer, window, &opts.quadrature)?;
    let mut samples = Vec::with_capacity(rows.len());
    for (row, s) in rows.iter().zip(&traj.samples) {
        let (de, _) = front_rates(inner, outer, n, s.t, s.phi, s.e, s.u_delta)?;
        let (area, darea) = if n == 1 {
            (1.0, 0.0)
        } else {
            let c = sphere_measure(n);
            (c * s.phi.powi(n as i32 - 1), c * (n as f64 - 1.0) * s.phi.powi(n as i32 - 2))
        };
        let (ri, ui) = inner.eval(s.phi, s.t, n)?;
        let (ro, uo) = outer.eval(s.phi, s.t, n)?;
        let (ok, strict) = spherical_entropy(inner, outer, n, s.t, s.phi, s.u_delta)?;
        samples.push(BalanceSample {
            t: s.t,
            mass: row.mass,
            front_mass: row.front_mass,
            momentum: vec![row.momentum],
            front_momentum: vec![row.front_momentum],
            energy: row.energy,
            front_energy: row.front_energy,
            mdot_exact: area * de + darea * s.u_delta * s.e,
            mdot: 0.0,
            entropy_ok: ok,
            entropy_strict: strict,
            jump: ri != ro || ui != uo,
            abs_momentum: row.abs_momentum,
        });
    }
    Ok(finish(samples, opts))
}

/// Surface density of kinetic-energy dissipation at a front point and
/// whether the (non-strict) entropy condition holds there. The value is never
/// clamped; violating states may give negative values.
pub fn energy_dissipation_rate(s: &SideStates, f: &FrontState) -> Result<(f64, bool)> {
    s.validate()?;
    let g = f.g;
    let split = |u: &[f64]| {
        let un = dot(u, &f.nu);
        let tan = sub(u, &scale(&f.nu, un));
        (un, dot(&tan, &tan))
    };
    let (um, tm) = split(&s.u_minus);
    let (up, tp) = split(&s.u_plus);
    let a = um - g;
    let b = g - up;
    let value = 0.5 * (s.rho_minus * tm * a + s.rho_plus * tp * b + s.rho_minus * a.powi(3) + s.rho_plus * b.powi(3));
    Ok((value, entropy_ok(s, f, false)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyInequalityReport {
    /// `int int (rho u^2 phi_t + rho u^3 phi_x) + int e u_d^2 (phi_t + u_d phi_x) dt`
    /// for each nonnegative member vanishing near `t = 0`.
    pub values: Vec<f64>,
    pub min: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Distributional form of `(rho u^2)_t + (rho u^3)_x <= 0` on a 1-D
/// standard-flux solution: each value must be `>= -tol`.
pub fn check_energy_inequality_1d(
    sol: &dyn DeltaShockSolution,
    battery: &TestFunctionBattery,
    quad: &Composite,
    tol: f64,
) -> Result<EnergyInequalityReport> {
    if sol.dim() != 1 || !sol.flux().is_standard() {
        return Err(Error::InvalidParameter("energy inequality check needs a 1-D standard-flux solution".into()));
    }
    battery.validate()?;
    let members = battery.nonnegative_interior();
    if members.is_empty() {
        return Err(Error::InvalidBattery("no nonnegative member vanishing near t = 0".into()));
    }
    let values = members.iter().map(|phi| energy_functional(sol, phi, quad)).collect::<Result<Vec<f64>>>()?;
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(EnergyInequalityReport { passed: min >= -tol, min, tolerance: tol, values })
}

fn energy_functional(sol: &dyn DeltaShockSolution, phi: &TestFunction, quad: &Composite) -> Result<f64> {
    let (t_lo, t_hi) = phi.time_range();
    let (x_lo, x_hi) = phi.space_box()[0];
    let mut total = 0.0;
    for (t, wt) in quad.nodes(t_lo, t_hi, &[]) {
        let front = sol.front(t)?;
        let breaks = sol.breakpoints(t)?;
        let mut slice = 0.0;
        for (x, wx) in quad.nodes(x_lo, x_hi, &breaks) {
            let (rho, u) = sol.state_near(&[x], t, &front)?;
            if rho == 0.0 {
                continue;
            }
            let (_, g, dt) = phi.eval_all(&[x], t);
            let u = u[0];
            slice += wx * rho * u * u * (dt + u * g[0]);
        }
        if front.position >= x_lo && front.position <= x_hi {
            let (_, g, dt) = phi.eval_all(&[front.position], t);
            let ud = front.speed;
            slice += front.e * ud * ud * (dt + ud * g[0]);
        }
        total += wt * slice;
    }
    Ok(total)
}
