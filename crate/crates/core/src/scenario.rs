//! Scenario files: schema, dispatch to the solvers and audits, and the
//! report/CSV/manifest artifacts written for each run.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::balance::{audit, audit_trajectory, check_energy_inequality_1d, energy_dissipation_rate, AuditOptions, BalanceReport};
use crate::error::{Error, Result};
use crate::fluxes::FluxSpec;
use crate::geometry::suite::run_suite;
use crate::ode::OdeOptions;
use crate::quadrature::Composite;
use crate::rh::{deficits, tangential_residual};
use crate::riemann1d::{solve_constant_states, RiemannData1D};
use crate::solution::{DeltaShockSolution, PlanarFront, PlanarSolution, SphericalSolution};
use crate::spherical::{integrate_front, FrontOptions, RadialField, RadialFieldSpec, SphericalFrontState, SphericalTrajectory, StopReason};
use crate::sticky::{delta_cluster_estimate, radial_oracle, sample_riemann, sample_riemann_random};
use crate::tolerances;
use crate::vecops::{dot, norm, scale};
use crate::weakcheck::{evaluate_identities, levels, make_nonnegative_battery, SpaceTimeBox, TestFunctionBattery};

fn default_samples() -> usize {
    101
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiemannProblem {
    pub rho_l: f64,
    pub u_l: f64,
    pub rho_r: f64,
    pub u_r: f64,
    #[serde(default)]
    pub e0: f64,
    #[serde(default)]
    pub u_delta0: Option<f64>,
    #[serde(default)]
    pub x0: f64,
    pub t_end: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Initial support of the regular part; defaults to `x0 -/+ 5`.
    #[serde(default)]
    pub support: Option<[f64; 2]>,
    /// Replace the entropy solution by the mass-emitting weak solution of
    /// symmetric diverging data (`rho_l = rho_r`, `u_l = -u_r < 0`).
    #[serde(default)]
    pub time_reversed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanarProblem {
    pub normal: Vec<f64>,
    pub rho_minus: f64,
    pub u_minus: Vec<f64>,
    pub rho_plus: f64,
    pub u_plus: Vec<f64>,
    /// Front offset along the normal at `t = 0`.
    #[serde(default)]
    pub x0: f64,
    pub t_end: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Support along the normal; defaults to `x0 -/+ 5`.
    #[serde(default)]
    pub support: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadialOracleSpec {
    pub shells: usize,
    pub annulus: [f64; 2],
}

fn default_spherical_samples() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SphericalProblem {
    pub n: usize,
    pub inner: RadialFieldSpec,
    pub outer: RadialFieldSpec,
    pub phi0: f64,
    #[serde(default)]
    pub e0: f64,
    #[serde(default)]
    pub u_delta0: f64,
    pub t_end: f64,
    #[serde(default = "default_spherical_samples")]
    pub samples: usize,
    #[serde(default)]
    pub r_min: Option<f64>,
    #[serde(default)]
    pub oracle: Option<RadialOracleSpec>,
}

fn default_oracle_samples() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleProblem {
    pub rho_l: f64,
    pub u_l: f64,
    pub rho_r: f64,
    pub u_r: f64,
    pub particles: usize,
    pub half_length: f64,
    pub t_end: f64,
    #[serde(default = "default_oracle_samples")]
    pub samples: usize,
    /// Jittered instead of midpoint sampling (uses the scenario seed).
    #[serde(default)]
    pub random: bool,
}

fn default_members() -> usize {
    8
}
fn default_levels() -> usize {
    6
}
fn default_points() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeakProblem {
    pub candidate: Box<Problem>,
    #[serde(rename = "box")]
    pub bounds: SpaceTimeBox,
    #[serde(default = "default_members")]
    pub members: usize,
    #[serde(default = "default_levels")]
    pub levels: usize,
    #[serde(default = "default_points")]
    pub points: usize,
    /// Shift of the front speed applied to planar candidates.
    #[serde(default)]
    pub perturb: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Problem {
    Riemann1d(RiemannProblem),
    Planar(PlanarProblem),
    Spherical(SphericalProblem),
    Oracle(OracleProblem),
    Weakcheck(WeakProblem),
    #[serde(rename = "geom-suite")]
    GeomSuite {},
}

impl Problem {
    pub fn kind(&self) -> &'static str {
        match self {
            Problem::Riemann1d(_) => "riemann1d",
            Problem::Planar(_) => "planar",
            Problem::Spherical(_) => "spherical",
            Problem::Oracle(_) => "oracle",
            Problem::Weakcheck(_) => "weakcheck",
            Problem::GeomSuite {} => "geom-suite",
        }
    }

    /// Weak-check box around the front of a candidate problem over its run.
    pub fn default_box(&self) -> Result<SpaceTimeBox> {
        let (space, t_end) = match self {
            Problem::Riemann1d(r) => (vec![(r.x0 - 1.0, r.x0 + 1.0)], r.t_end),
            Problem::Planar(p) => {
                let nu = scale(&p.normal, 1.0 / norm(&p.normal));
                (nu.iter().map(|c| (c * p.x0 - 1.0, c * p.x0 + 1.0)).collect(), p.t_end)
            }
            Problem::Spherical(p) => {
                let r = p.phi0 + 0.5;
                (vec![(-r, r); p.n], p.t_end)
            }
            _ => return Err(schema(format!("`{}` is not a weak-check candidate", self.kind()))),
        };
        Ok(SpaceTimeBox { space, time: (0.0, t_end) })
    }
}

/// Tolerance keys accepted in the `tolerances` override map.
pub const TOLERANCE_KEYS: [(&str, f64); 11] = [
    ("cons", tolerances::CONS_CLOSED_FORM),
    ("cons_ode", tolerances::CONS_INTEGRATED),
    ("mono", tolerances::MONO_CLOSED_FORM),
    ("mono_ode", tolerances::MONO_INTEGRATED),
    ("energy", 1e-6),
    ("weak", 1e-6),
    ("weak_order", 4.0),
    ("oracle_speed", 2e-3),
    ("oracle_mass", 5e-3),
    ("oracle_radial", 1e-2),
    ("tangential", 1e-12),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub flux: FluxSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    pub problem: Problem,
}

fn schema(msg: impl Into<String>) -> Error {
    Error::Schema(msg.into())
}

fn positive(what: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(schema(format!("{what} must be positive and finite, got {v}")))
    }
}

impl Scenario {
    /// Parses and validates; every failure is a schema error.
    pub fn from_json(src: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(src)?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let src = fs::read_to_string(path).map_err(|e| schema(format!("{}: {e}", path.display())))?;
        Self::from_json(&src)
    }

    pub fn tolerance(&self, key: &str) -> f64 {
        let default = TOLERANCE_KEYS.iter().find(|(k, _)| *k == key).map(|(_, v)| *v).unwrap_or(f64::NAN);
        self.tolerances.get(key).copied().unwrap_or(default)
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || !self.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return Err(schema("name must be a nonempty identifier"));
        }
        for (k, v) in &self.tolerances {
            if !TOLERANCE_KEYS.iter().any(|(key, _)| key == k) {
                return Err(schema(format!("unknown tolerance `{k}`")));
            }
            positive(&format!("tolerance {k}"), *v)?;
        }
        if let FluxSpec::Relativistic { c0 } = &self.flux {
            positive("c0", *c0)?;
        }
        validate_problem(&self.problem, &self.flux, true)
    }
}

fn validate_problem(p: &Problem, flux: &FluxSpec, top: bool) -> Result<()> {
    let check_samples = |s: usize| if s >= 2 { Ok(()) } else { Err(schema("samples must be at least 2")) };
    match p {
        Problem::Riemann1d(r) => {
            positive("t_end", r.t_end)?;
            check_samples(r.samples)?;
            if r.time_reversed && !(r.rho_l == r.rho_r && r.rho_l > 0.0 && r.u_l < 0.0 && r.u_r == -r.u_l && r.e0 == 0.0) {
                return Err(schema("time_reversed needs rho_l = rho_r > 0, u_l = -u_r < 0 and e0 = 0"));
            }
        }
        Problem::Planar(q) => {
            positive("t_end", q.t_end)?;
            check_samples(q.samples)?;
            let n = q.normal.len();
            if n == 0 || q.u_minus.len() != n || q.u_plus.len() != n {
                return Err(schema("normal, u_minus and u_plus must have the same nonzero length"));
            }
            if !(norm(&q.normal) > 0.0) {
                return Err(schema("normal must be nonzero"));
            }
        }
        Problem::Spherical(s) => {
            positive("t_end", s.t_end)?;
            check_samples(s.samples)?;
            if s.n == 0 {
                return Err(schema("n must be at least 1"));
            }
            if s.n >= 2 {
                positive("phi0", s.phi0)?;
            }
            if !matches!(flux, FluxSpec::Standard {}) {
                return Err(schema("spherical fronts use the standard flux"));
            }
            if let Some(o) = &s.oracle {
                if s.n < 2 {
                    return Err(schema("the radial oracle needs n >= 2"));
                }
                if !(0.0 <= o.annulus[0] && o.annulus[0] < s.phi0 && s.phi0 < o.annulus[1]) {
                    return Err(schema("oracle annulus must contain phi0"));
                }
            }
            RadialField::from_spec(&s.inner).map_err(|e| schema(e.to_string()))?;
            RadialField::from_spec(&s.outer).map_err(|e| schema(e.to_string()))?;
        }
        Problem::Oracle(o) => {
            positive("t_end", o.t_end)?;
            positive("half_length", o.half_length)?;
            if o.samples == 0 {
                return Err(schema("samples must be positive"));
            }
            if !matches!(flux, FluxSpec::Standard {}) {
                return Err(schema("sticky particles use the standard flux"));
            }
        }
        Problem::Weakcheck(w) => {
            if !top {
                return Err(schema("weakcheck problems cannot be nested"));
            }
            if !matches!(*w.candidate, Problem::Riemann1d(_) | Problem::Planar(_) | Problem::Spherical(_)) {
                return Err(schema("weakcheck candidate must be riemann1d, planar or spherical"));
            }
            if w.perturb != 0.0 && matches!(*w.candidate, Problem::Spherical(_)) {
                return Err(schema("perturb applies to planar candidates only"));
            }
            if w.members == 0 || w.levels == 0 || w.points == 0 {
                return Err(schema("members, levels and points must be positive"));
            }
            validate_problem(&w.candidate, flux, false)?;
        }
        Problem::GeomSuite {} => {}
    }
    Ok(())
}

/// One pass/fail line of a run. Advisory checks are reported but only
/// enforced in strict mode.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub tolerance: f64,
    pub advisory: bool,
}

impl Check {
    fn new(name: &str, passed: bool, value: f64, tolerance: f64) -> Self {
        Check { name: name.into(), passed, value, tolerance, advisory: false }
    }

    fn advisory(mut self) -> Self {
        self.advisory = true;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub files: Vec<String>,
    pub checks: Vec<Check>,
    pub exit_code: i32,
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out: PathBuf,
    /// Artifact renames inside `out`, e.g. `trajectory.csv -> run.csv`.
    pub rename: BTreeMap<String, String>,
    pub strict: bool,
}

impl RunOptions {
    pub fn new(out: impl Into<PathBuf>) -> Self {
        RunOptions { out: out.into(), rename: BTreeMap::new(), strict: false }
    }

    /// Writes the artifact `artifact` to the file `path` and everything else
    /// next to it.
    pub fn single_file(path: &Path, artifact: &str) -> Self {
        let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        let mut o = RunOptions::new(dir);
        if let Some(name) = path.file_name() {
            o.rename.insert(artifact.into(), name.to_string_lossy().into_owned());
        }
        o
    }
}

/// Fixed 17-significant-digit scientific format used in every CSV.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_line(values: &[f64]) -> String {
    let mut s = values.iter().map(|v| fmt_num(*v)).collect::<Vec<_>>().join(",");
    s.push('\n');
    s
}

fn linspace(a: f64, b: f64, k: usize) -> Vec<f64> {
    (0..k).map(|i| a + (b - a) * i as f64 / (k - 1) as f64).collect()
}

struct Artifacts {
    dir: PathBuf,
    rename: BTreeMap<String, String>,
    files: BTreeMap<String, Vec<u8>>,
}

impl Artifacts {
    fn add(&mut self, name: &str, contents: impl Into<Vec<u8>>) {
        let name = self.rename.get(name).cloned().unwrap_or_else(|| name.into());
        self.files.insert(name, contents.into());
    }

    fn plot(&mut self, csvs: &[(&str, usize)], xcol: usize, log: bool) {
        let named: Vec<(String, usize)> =
            csvs.iter().map(|(n, c)| (self.rename.get(*n).cloned().unwrap_or_else(|| (*n).into()), *c)).collect();
        self.add("plot.gp", gnuplot(&named, xcol, log));
    }

    fn write(self) -> Result<Vec<String>> {
        fs::create_dir_all(&self.dir)?;
        let mut manifest = Vec::new();
        for (name, bytes) in &self.files {
            fs::write(self.dir.join(name), bytes)?;
            manifest.push(serde_json::json!({
                "path": name,
                "bytes": bytes.len(),
                "sha256": hex::encode(Sha256::digest(bytes)),
            }));
        }
        let m = serde_json::to_string_pretty(&serde_json::json!({ "files": manifest }))?;
        fs::write(self.dir.join("manifest.json"), m + "\n")?;
        let mut names: Vec<String> = self.files.into_keys().collect();
        names.push("manifest.json".into());
        Ok(names)
    }
}

fn balance_checks(report: &BalanceReport, enforce_energy: bool, out: &mut Vec<Check>) {
    for c in &report.checks {
        let mut check = Check::new(&c.name, c.passed, c.worst, c.tolerance);
        let energy = c.name.contains("energy") || c.name == "front_mass_growth";
        if energy && !enforce_energy {
            check = check.advisory();
        }
        out.push(check);
    }
}

fn gnuplot(csvs: &[(String, usize)], xcol: usize, log: bool) -> String {
    let mut s = String::from("set datafile separator ','\nset key autotitle columnhead\nset terminal pngcairo size 900,600\n");
    if log {
        s.push_str("set logscale xy\n");
    }
    for (name, cols) in csvs {
        let stem = name.trim_end_matches(".csv");
        let _ = writeln!(s, "set output '{stem}.png'");
        let plots: Vec<String> =
            (xcol + 1..=*cols)
                .map(|c| {
                    if c == xcol + 1 {
                        format!("'{name}' using {xcol}:{c} with lines")
                    } else {
                        format!("'' using {xcol}:{c} with lines")
                    }
                })
                .collect();
        let _ = writeln!(s, "plot {}", plots.join(", "));
    }
    s
}

fn riemann_data(p: &RiemannProblem, flux: &FluxSpec) -> Result<RiemannData1D> {
    let mut d = RiemannData1D::new(p.rho_l, p.u_l, p.rho_r, p.u_r, flux.build(1)?)?.at(p.x0)?;
    if p.e0 > 0.0 {
        let u = p.u_delta0.ok_or_else(|| schema("u_delta0 is required when e0 > 0"))?;
        d = d.with_point_mass(p.e0, u)?;
    }
    Ok(d)
}

/// Planar solution of a 1-D Riemann scenario (entropy or time-reversed).
pub fn riemann_solution(p: &RiemannProblem, flux: &FluxSpec) -> Result<PlanarSolution> {
    let [lo, hi] = p.support.unwrap_or([p.x0 - 5.0, p.x0 + 5.0]);
    let sol = if p.time_reversed {
        let rate = 2.0 * p.rho_l * p.u_r;
        PlanarSolution {
            flux: flux.build(1)?,
            normal: vec![1.0],
            minus: (p.rho_l, vec![p.u_l]),
            plus: (p.rho_r, vec![p.u_r]),
            front: PlanarFront::Affine { x0: p.x0, speed: 0.0, e0: rate * p.t_end, rate: -rate },
            support0: None,
        }
    } else {
        PlanarSolution::solve_riemann(&riemann_data(p, flux)?)?
    };
    sol.with_support(lo, hi)
}

/// Normal dynamics of a planar scenario from the 1-D problem on the normal axis.
pub fn planar_solution(p: &PlanarProblem, flux: &FluxSpec) -> Result<PlanarSolution> {
    let n = p.normal.len();
    let nu = scale(&p.normal, 1.0 / norm(&p.normal));
    let d = RiemannData1D::new(p.rho_minus, dot(&p.u_minus, &nu), p.rho_plus, dot(&p.u_plus, &nu), flux.build(1)?)?.at(p.x0)?;
    let path = solve_constant_states(&d)?;
    let [lo, hi] = p.support.unwrap_or([p.x0 - 5.0, p.x0 + 5.0]);
    PlanarSolution {
        flux: flux.build(n)?,
        normal: nu,
        minus: (p.rho_minus, p.u_minus.clone()),
        plus: (p.rho_plus, p.u_plus.clone()),
        front: PlanarFront::Path(path),
        support0: None,
    }
    .with_support(lo, hi)
}

/// Front samples of a planar run: `(t, phi, e, front point, U_delta)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanarRow {
    pub t: f64,
    pub phi: f64,
    pub e: f64,
    pub point: Vec<f64>,
    pub u_delta: Vec<f64>,
    pub mass_rate: f64,
    pub momentum_rate: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct PlanarRun {
    pub solution: PlanarSolution,
    pub rows: Vec<PlanarRow>,
    pub tangential: Vec<f64>,
    pub entropy_ok: bool,
    pub balance: BalanceReport,
}

fn front_rows(sol: &PlanarSolution, times: &[f64]) -> Result<(Vec<PlanarRow>, bool)> {
    let mut rows = Vec::with_capacity(times.len());
    let mut ok = true;
    for &t in times {
        let f = sol.front(t)?;
        let point = scale(&sol.normal, f.position);
        let (sides, fs) = sol.jump_data(&point, t)?;
        let d = deficits(sol.flux(), &sides, &fs)?;
        ok &= crate::rh::entropy_ok(&sides, &fs, false);
        rows.push(PlanarRow {
            t,
            phi: f.position,
            e: f.e,
            point,
            u_delta: fs.u_delta.clone(),
            mass_rate: d.mass,
            momentum_rate: d.momentum,
        });
    }
    Ok((rows, ok))
}

fn audit_options(s: &Scenario, integrated: bool) -> AuditOptions {
    AuditOptions {
        tol_cons: s.tolerance(if integrated { "cons_ode" } else { "cons" }),
        tol_mono: s.tolerance(if integrated { "mono_ode" } else { "mono" }),
        quadrature: Composite::new(8, 16),
        window: None,
    }
}

pub fn planar_run(s: &Scenario, p: &PlanarProblem) -> Result<PlanarRun> {
    let solution = planar_solution(p, &s.flux)?;
    let times = linspace(0.0, p.t_end, p.samples);
    let (rows, entropy_ok) = front_rows(&solution, &times)?;
    let (sides, fs) = solution.jump_data(&rows[0].point, 0.0)?;
    let tangential = tangential_residual(solution.flux(), &sides, &fs)?;
    let balance = audit(&solution, &times, &audit_options(s, false))?;
    Ok(PlanarRun { solution, rows, tangential, entropy_ok, balance })
}

fn normal_momentum_check(report: &BalanceReport, nu: &[f64], tol: f64) -> Check {
    let s0 = &report.samples[0];
    let p0 = dot(&s0.sum_momentum(), nu);
    let scale = p0.abs().max(s0.abs_momentum);
    let worst = report.samples.iter().map(|s| (dot(&s.sum_momentum(), nu) - p0).abs()).fold(0.0, f64::max);
    let rel = if scale > 0.0 { worst / scale } else { worst };
    Check::new("momentum_conservation", rel <= tol, rel, tol)
}

fn rows_csv(rows: &[PlanarRow]) -> String {
    let n = rows.first().map_or(1, |r| r.point.len());
    let mut out = String::from("t,phi");
    let cols = |out: &mut String, stem: &str| {
        if n == 1 {
            let _ = write!(out, ",{stem}");
        } else {
            for k in 1..=n {
                let _ = write!(out, ",{stem}_{k}");
            }
        }
    };
    cols(&mut out, "u_delta");
    out.push_str(",e,mass_deficit");
    cols(&mut out, "momentum_deficit");
    if n > 1 {
        cols(&mut out, "x");
    }
    out.push('\n');
    for r in rows {
        let mut v = vec![r.t, r.phi];
        v.extend(&r.u_delta);
        v.extend([r.e, r.mass_rate]);
        v.extend(&r.momentum_rate);
        if n > 1 {
            v.extend(&r.point);
        }
        out.push_str(&csv_line(&v));
    }
    out
}

fn energy_checks(s: &Scenario, sol: &PlanarSolution, balance: &BalanceReport, t_end: f64, out: &mut Vec<Check>) -> Result<()> {
    if sol.dim() != 1 || !sol.flux.is_standard() {
        return Ok(());
    }
    let x = sol.front(0.0)?.position;
    let bx = SpaceTimeBox { space: vec![(x - 1.0, x + 1.0)], time: (0.0, t_end) };
    let battery = make_nonnegative_battery(&bx, 6, s.seed)?;
    let tol = s.tolerance("energy");
    let r = check_energy_inequality_1d(sol, &battery, &Composite::new(8, 16), tol)?;
    out.push(Check::new("energy_inequality", r.passed, r.min, tol));
    // a constant dissipation rate needs a constant-speed front
    if let PlanarFront::Path(p) = &sol.front {
        if !p.is_constant_speed() {
            return Ok(());
        }
    }
    let (sides, fs) = sol.jump_data(&[x], 0.0)?;
    let (rate, _) = energy_dissipation_rate(&sides, &fs)?;
    let t: Vec<f64> = balance.samples.iter().map(|s| s.t).collect();
    let worst = balance.energy_increments.iter().zip(t.windows(2)).map(|(d, w)| (d / (w[1] - w[0]) + rate).abs()).fold(0.0, f64::max);
    let tol = s.tolerance("cons") * rate.abs().max(1.0) * 10.0;
    out.push(Check::new("dissipation_rate", worst <= tol, rate, tol).advisory());
    Ok(())
}

fn report_json(s: &Scenario, checks: &[Check], extra: serde_json::Value) -> Result<String> {
    let status = if checks.iter().all(|c| c.passed || c.advisory) { "pass" } else { "fail" };
    let v = serde_json::json!({
        "name": s.name,
        "kind": s.problem.kind(),
        "seed": s.seed,
        "status": status,
        "checks": checks,
        "details": extra,
    });
    Ok(serde_json::to_string_pretty(&v)? + "\n")
}

fn run_riemann(s: &Scenario, p: &RiemannProblem, art: &mut Artifacts) -> Result<(Vec<Check>, serde_json::Value)> {
    let mut checks = Vec::new();
    let sol = match riemann_solution(p, &s.flux) {
        Ok(sol) => sol,
        Err(Error::NoDeltaShock(msg)) => {
            checks.push(Check::new("entropy_condition", false, f64::NAN, 0.0));
            return Ok((checks, serde_json::json!({ "failed_condition": "overcompression u_r <= u_delta <= u_l", "reason": msg })));
        }
        Err(e) => return Err(e),
    };
    let times = linspace(0.0, p.t_end, p.samples);
    let (rows, ok) = front_rows(&sol, &times)?;
    checks.push(Check::new("entropy_condition", ok, f64::from(u8::from(ok)), 1.0));
    let balance = audit(&sol, &times, &audit_options(s, false))?;
    balance_checks(&balance, sol.flux.is_standard(), &mut checks);
    energy_checks(s, &sol, &balance, p.t_end, &mut checks)?;
    art.add("trajectory.csv", rows_csv(&rows));
    art.add("balance.csv", balance.to_csv());
    art.plot(&[("trajectory.csv", 4), ("balance.csv", 5)], 1, false);
    let u = rows[0].u_delta[0];
    Ok((checks, serde_json::json!({ "u_delta0": u, "e_end": rows[rows.len() - 1].e })))
}

fn run_planar(s: &Scenario, p: &PlanarProblem, art: &mut Artifacts) -> Result<(Vec<Check>, serde_json::Value)> {
    let mut checks = Vec::new();
    let run = match planar_run(s, p) {
        Ok(r) => r,
        Err(Error::NoDeltaShock(msg)) => {
            checks.push(Check::new("entropy_condition", false, f64::NAN, 0.0));
            return Ok((checks, serde_json::json!({ "failed_condition": "overcompression along the normal", "reason": msg })));
        }
        Err(e) => return Err(e),
    };
    checks.push(Check::new("entropy_condition", run.entropy_ok, f64::from(u8::from(run.entropy_ok)), 1.0));
    balance_checks(&run.balance, run.solution.flux.is_standard(), &mut checks);
    let tn = norm(&run.tangential);
    if tn > 0.0 {
        // the front carries no tangential momentum, so only the normal
        // component balances; the tangential loss is the reported residual
        let c = normal_momentum_check(&run.balance, &run.solution.normal, s.tolerance("cons"));
        if let Some(slot) = checks.iter_mut().find(|c| c.name == "momentum_conservation") {
            *slot = c;
        }
    }
    let tol = s.tolerance("tangential");
    checks.push(Check::new("tangential_residual", tn <= tol, tn, tol).advisory());
    art.add("trajectory.csv", rows_csv(&run.rows));
    art.add("balance.csv", run.balance.to_csv());
    art.plot(&[("trajectory.csv", 4), ("balance.csv", 5)], 1, false);
    Ok((checks, serde_json::json!({ "tangential_residual": run.tangential })))
}

fn spherical_init(p: &SphericalProblem) -> SphericalFrontState {
    SphericalFrontState { t: 0.0, phi: p.phi0, e: p.e0, u_delta: p.u_delta0 }
}

pub fn spherical_trajectory(p: &SphericalProblem) -> Result<(RadialField, RadialField, SphericalTrajectory)> {
    let inner = RadialField::from_spec(&p.inner)?;
    let outer = RadialField::from_spec(&p.outer)?;
    let opts = FrontOptions { ode: OdeOptions::default(), r_min: p.r_min, samples: p.samples - 1 };
    let traj = integrate_front(&inner, &outer, spherical_init(p), p.n, p.t_end, &opts)?;
    Ok((inner, outer, traj))
}

fn run_spherical(s: &Scenario, p: &SphericalProblem, art: &mut Artifacts) -> Result<(Vec<Check>, serde_json::Value)> {
    let mut checks = Vec::new();
    let (inner, outer, traj) = match spherical_trajectory(p) {
        Ok(x) => x,
        Err(Error::NoDeltaShock(msg)) => {
            checks.push(Check::new("entropy_condition", false, f64::NAN, 0.0));
            return Ok((checks, serde_json::json!({ "failed_condition": "u_outer <= phi_dot <= u_inner", "reason": msg })));
        }
        Err(e) => return Err(e),
    };
    let ok = traj.stop != StopReason::EntropyViolation;
    checks.push(Check::new("entropy_condition", ok, f64::from(u8::from(ok)), 1.0));
    let mut plots = vec![("trajectory.csv", 5)];
    let mut details = serde_json::json!({ "stop": traj.stop, "r_min": traj.r_min });
    let report = match audit_trajectory(&traj, &inner, &outer, &audit_options(s, true)) {
        Ok(report) => {
            balance_checks(&report, true, &mut checks);
            art.add("balance.csv", report.to_csv());
            plots.push(("balance.csv", 5));
            Some(report)
        }
        Err(Error::AuditInvalid(msg)) => {
            details["audit"] = serde_json::json!(format!("skipped: {msg}"));
            None
        }
        Err(e) => return Err(e),
    };
    // regular mass is only finite for compactly supported fields
    let mut csv = String::from("t,phi,u_delta,e,m,M,M_plus_m,entropy_ok\n");
    for (k, smp) in traj.samples.iter().enumerate() {
        let m = traj.front_mass(smp);
        let big = report.as_ref().map_or(f64::NAN, |r| r.samples[k].mass);
        let ok = if smp.entropy_ok { 1.0 } else { 0.0 };
        csv.push_str(&csv_line(&[smp.t, smp.phi, smp.u_delta, smp.e, m, big, big + m, ok]));
    }
    art.add("trajectory.csv", csv);
    if let Some(o) = &p.oracle {
        let stop = 2.0 * traj.r_min;
        let kept: Vec<_> = traj.samples.iter().filter(|x| x.phi > stop).collect();
        let times: Vec<f64> = kept.iter().map(|x| x.t).collect();
        let run = radial_oracle(&inner, &outer, &spherical_init(p), p.n, o.shells, (o.annulus[0], o.annulus[1]), &times, stop)?;
        let mut csv = String::from("t,phi,phi_oracle,m,m_oracle\n");
        let (mut ephi, mut em) = (0.0f64, 0.0f64);
        for (smp, c) in kept.iter().zip(&run.samples) {
            let m = traj.front_mass(smp);
            ephi = ephi.max((c.position - smp.phi).abs() / smp.phi);
            if m > 0.0 {
                em = em.max((c.mass - m).abs() / m);
            }
            csv.push_str(&csv_line(&[smp.t, smp.phi, c.position, m, c.mass]));
        }
        art.add("oracle.csv", csv);
        plots.push(("oracle.csv", 5));
        let tol = s.tolerance("oracle_radial");
        checks.push(Check::new("oracle_phi", ephi <= tol, ephi, tol));
        checks.push(Check::new("oracle_mass", em <= tol, em, tol));
        details["oracle_samples"] = serde_json::json!(run.samples.len());
    }
    art.plot(&plots, 1, false);
    Ok((checks, details))
}

fn run_oracle(s: &Scenario, p: &OracleProblem, art: &mut Artifacts) -> Result<(Vec<Check>, serde_json::Value)> {
    let d = RiemannData1D::new(p.rho_l, p.u_l, p.rho_r, p.u_r, s.flux.build(1)?)?;
    let path = solve_constant_states(&d)?;
    let ps = if p.random {
        sample_riemann_random(&d, p.half_length, p.particles, s.seed)?
    } else {
        sample_riemann(&d, p.half_length, p.particles)?
    };
    let times: Vec<f64> = (1..=p.samples).map(|k| p.t_end * k as f64 / p.samples as f64).collect();
    let est = delta_cluster_estimate(&ps, &times)?;
    let mut csv = String::from("t,position,mass,velocity,phi_exact,e_exact\n");
    for c in &est.history {
        let q = path.at(c.t)?;
        csv.push_str(&csv_line(&[c.t, c.position, c.mass, c.velocity, q.phi, q.e]));
    }
    art.add("oracle.csv", csv);
    art.plot(&[("oracle.csv", 6)], 1, false);
    let exact = path.at(p.t_end)?;
    let last = est.history.last().ok_or_else(|| Error::NotConverged("no samples".into()))?;
    let du = (est.u_delta_hat - exact.u_delta).abs();
    let de = (last.mass - exact.e).abs() / exact.e.max(f64::MIN_POSITIVE);
    let (ts, tm) = (s.tolerance("oracle_speed"), s.tolerance("oracle_mass"));
    let checks = vec![Check::new("oracle_speed", du <= ts, du, ts), Check::new("oracle_mass", de <= tm, de, tm)];
    Ok((checks, serde_json::json!({ "u_delta": exact.u_delta, "u_delta_hat": est.u_delta_hat, "e_end": exact.e, "e_hat": last.mass })))
}

fn candidate_solution(s: &Scenario, p: &Problem, perturb: f64) -> Result<Box<dyn DeltaShockSolution>> {
    let planar = |sol: PlanarSolution| -> Result<Box<dyn DeltaShockSolution>> {
        Ok(if perturb != 0.0 { Box::new(sol.perturbed(perturb)?) } else { Box::new(sol) })
    };
    match p {
        Problem::Riemann1d(r) => planar(riemann_solution(r, &s.flux)?),
        Problem::Planar(q) => planar(planar_solution(q, &s.flux)?),
        Problem::Spherical(q) if q.n >= 2 => {
            let inner = RadialField::from_spec(&q.inner)?;
            let outer = RadialField::from_spec(&q.outer)?;
            let sol = SphericalSolution::integrate(inner, outer, q.n, spherical_init(q), q.t_end, 4 * q.samples, OdeOptions::default())?;
            Ok(Box::new(sol))
        }
        _ => Err(schema("weakcheck candidate must be riemann1d, planar or spherical with n >= 2")),
    }
}

fn run_weak(s: &Scenario, p: &WeakProblem, art: &mut Artifacts) -> Result<(Vec<Check>, serde_json::Value)> {
    let sol = candidate_solution(s, &p.candidate, p.perturb)?;
    let battery: TestFunctionBattery = crate::weakcheck::make_battery(&p.bounds, p.members, s.seed)?;
    let r = evaluate_identities(sol.as_ref(), &battery, &levels(p.points, p.levels))?;
    let n = sol.dim();
    let mut csv = String::from("points,panels,mass");
    for k in 1..=n {
        let _ = write!(csv, ",momentum_{k}");
    }
    csv.push('\n');
    for l in &r.levels {
        let mut v = vec![l.level.points as f64, l.level.panels as f64];
        v.extend(&l.max_abs);
        csv.push_str(&csv_line(&v));
    }
    art.add("weak.csv", csv);
    art.plot(&[("weak.csv", 3 + n)], 2, true);
    let tol = s.tolerance("weak");
    let order_tol = s.tolerance("weak_order");
    let worst = r.max_finest();
    let order = r.observed_order;
    let mut checks = vec![Check::new("weak_residual", worst < tol, worst, tol)];
    // a residual already at round-off has no measurable order
    let order_ok = order.is_none_or(|o| o >= order_tol) || worst < 1e-12;
    checks.push(Check::new("observed_order", order_ok, order.unwrap_or(f64::NAN), order_tol));
    checks.push(Check::new("monotone_refinement", r.monotone(), 0.0, 0.0).advisory());
    Ok((checks, serde_json::json!({ "finest": r.finest, "per_member": r.per_member, "observed_order": r.observed_order })))
}

fn run_geometry(art: &mut Artifacts) -> Result<(Vec<Check>, serde_json::Value)> {
    let rows = run_suite()?;
    let mut csv = String::from("check,value,expected,error,tolerance,passed\n");
    let mut checks = Vec::new();
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            r.name,
            fmt_num(r.value),
            fmt_num(r.expected),
            fmt_num(r.error),
            fmt_num(r.tolerance),
            u8::from(r.passed)
        );
        checks.push(Check::new(&r.name, r.passed, r.value, r.tolerance));
    }
    art.add("geometry.csv", csv);
    Ok((checks, serde_json::Value::Null))
}

/// Runs a validated scenario and writes its artifacts. Numerical failures are
/// returned as errors; theorem-check failures set exit code 4.
pub fn run(s: &Scenario, opts: &RunOptions) -> Result<RunOutcome> {
    s.validate()?;
    let mut art = Artifacts { dir: opts.out.clone(), rename: opts.rename.clone(), files: BTreeMap::new() };
    let (checks, details) = match &s.problem {
        Problem::Riemann1d(p) => run_riemann(s, p, &mut art)?,
        Problem::Planar(p) => run_planar(s, p, &mut art)?,
        Problem::Spherical(p) => run_spherical(s, p, &mut art)?,
        Problem::Oracle(p) => run_oracle(s, p, &mut art)?,
        Problem::Weakcheck(p) => run_weak(s, p, &mut art)?,
        Problem::GeomSuite {} => run_geometry(&mut art)?,
    };
    art.add("report.json", report_json(s, &checks, details)?);
    let failed = checks.iter().any(|c| !c.passed && (!c.advisory || opts.strict));
    let dir = art.dir.clone();
    let files = art.write()?;
    Ok(RunOutcome { dir, files, checks, exit_code: if failed { 4 } else { 0 } })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SYM: &str = r#"{
        "name": "sym",
        "problem": {"kind": "riemann1d", "rho_l": 1, "u_l": 1, "rho_r": 1, "u_r": -1, "t_end": 1, "samples": 11}
    }"#;

    #[test]
    fn parses_and_rejects_unknown_keys() {
        let s = Scenario::from_json(SYM).unwrap();
        assert_eq!(s.problem.kind(), "riemann1d");
        assert_eq!(s.tolerance("cons"), 1e-8);
        let bad = SYM.replace("\"samples\": 11", "\"samples\": 11, \"bogus\": 1");
        assert!(matches!(Scenario::from_json(&bad), Err(Error::Schema(_))));
        let bad = SYM.replace("\"name\": \"sym\",", "\"name\": \"sym\", \"extra\": true,");
        assert!(matches!(Scenario::from_json(&bad), Err(Error::Schema(_))));
        assert!(matches!(Scenario::from_json("{"), Err(Error::Schema(_))));
        let bad = SYM.replace("\"name\": \"sym\",", "\"name\": \"sym\", \"tolerances\": {\"nope\": 1},");
        assert!(matches!(Scenario::from_json(&bad), Err(Error::Schema(_))));
        let geo = Scenario::from_json(r#"{"name": "g", "problem": {"kind": "geom-suite"}}"#).unwrap();
        assert_eq!(geo.problem.kind(), "geom-suite");
    }

    #[test]
    fn symmetric_run_passes() {
        let dir = tempfile::tempdir().unwrap();
        let s = Scenario::from_json(SYM).unwrap();
        let out = run(&s, &RunOptions::new(dir.path())).unwrap();
        assert_eq!(out.exit_code, 0, "{:?}", out.checks);
        for f in ["trajectory.csv", "balance.csv", "report.json", "manifest.json", "plot.gp"] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
        assert_eq!(manifest["files"].as_array().unwrap().len(), 4);
        let c = out.checks.iter().find(|c| c.name == "dissipation_rate").unwrap();
        assert!(c.passed && c.value == 1.0);
    }

    #[test]
    fn rarefaction_data_fail_the_entropy_condition() {
        let dir = tempfile::tempdir().unwrap();
        let s = Scenario::from_json(&SYM.replace("\"u_l\": 1", "\"u_l\": -1").replace("\"u_r\": -1", "\"u_r\": 1")).unwrap();
        let out = run(&s, &RunOptions::new(dir.path())).unwrap();
        assert_eq!(out.exit_code, 4);
        let report = fs::read_to_string(dir.path().join("report.json")).unwrap();
        assert!(report.contains("overcompression"));
    }

    #[test]
    fn time_reversed_run_fails_by_design() {
        let dir = tempfile::tempdir().unwrap();
        let src = SYM
            .replace("\"u_l\": 1", "\"u_l\": -1")
            .replace("\"u_r\": -1", "\"u_r\": 1")
            .replace("\"samples\": 11", "\"samples\": 11, \"time_reversed\": true");
        let out = run(&Scenario::from_json(&src).unwrap(), &RunOptions::new(dir.path())).unwrap();
        assert_eq!(out.exit_code, 4);
        let failed: Vec<&str> = out.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        for name in ["entropy_condition", "total_energy_nonincreasing", "energy_inequality"] {
            assert!(failed.contains(&name), "{failed:?}");
        }
        assert!(!failed.contains(&"mass_conservation"));
    }

    fn planar(normal: [f64; 2], um: [f64; 2], up: [f64; 2]) -> Scenario {
        Scenario {
            name: "p".into(),
            flux: FluxSpec::default(),
            seed: 0,
            output: None,
            tolerances: BTreeMap::new(),
            problem: Problem::Planar(PlanarProblem {
                normal: normal.to_vec(),
                rho_minus: 4.0,
                u_minus: um.to_vec(),
                rho_plus: 1.0,
                u_plus: up.to_vec(),
                x0: 0.0,
                t_end: 1.0,
                samples: 6,
                support: None,
            }),
        }
    }

    fn run_of(s: &Scenario) -> PlanarRun {
        match &s.problem {
            Problem::Planar(p) => planar_run(s, p).unwrap(),
            _ => unreachable!(),
        }
    }

    #[test]
    fn planar_run_without_tangential_jump_matches_1d() {
        let r = run_of(&planar([1.0, 0.0], [1.0, 0.0], [-1.0, 0.0]));
        assert!(norm(&r.tangential) == 0.0);
        for row in &r.rows {
            assert!((row.u_delta[0] - 1.0 / 3.0).abs() < 1e-15 && (row.e - 4.0 * row.t).abs() < 1e-13);
        }
        assert!(r.balance.passed());
        // common tangential velocity carried in with the mass
        let r = run_of(&planar([1.0, 0.0], [1.0, 0.5], [-1.0, 0.5]));
        assert!((r.tangential[1] - 0.5 * 4.0).abs() < 1e-13, "{:?}", r.tangential);
        let r = run_of(&planar([1.0, 0.0], [1.0, 0.5], [-1.0, 0.2]));
        assert!((r.tangential[1] - (4.0 * 0.5 * 2.0 / 3.0 + 0.2 * 4.0 / 3.0)).abs() < 1e-13, "{:?}", r.tangential);
    }

    #[test]
    fn planar_runs_are_frame_covariant() {
        let a: f64 = 0.7;
        let rot = |v: [f64; 2]| [a.cos() * v[0] - a.sin() * v[1], a.sin() * v[0] + a.cos() * v[1]];
        let (um, up) = ([1.0, 0.3], [-1.0, 0.3]);
        let base = run_of(&planar([1.0, 0.0], um, up));
        let turned = run_of(&planar(rot([1.0, 0.0]), rot(um), rot(up)));
        for (p, q) in base.rows.iter().zip(&turned.rows) {
            assert!((p.phi - q.phi).abs() < 1e-12 && (p.e - q.e).abs() < 1e-12);
            let (x, u) = (rot([p.point[0], p.point[1]]), rot([p.u_delta[0], p.u_delta[1]]));
            for k in 0..2 {
                assert!((x[k] - q.point[k]).abs() < 1e-12 && (u[k] - q.u_delta[k]).abs() < 1e-12);
            }
        }
        let tb = rot([base.tangential[0], base.tangential[1]]);
        assert!((tb[0] - turned.tangential[0]).abs() < 1e-12 && (tb[1] - turned.tangential[1]).abs() < 1e-12);
        for (p, q) in base.balance.samples.iter().zip(&turned.balance.samples) {
            let pm = rot([p.sum_momentum()[0], p.sum_momentum()[1]]);
            let qm = q.sum_momentum();
            assert!((pm[0] - qm[0]).abs() < 1e-12 && (pm[1] - qm[1]).abs() < 1e-12);
            assert!((p.sum_mass() - q.sum_mass()).abs() < 1e-12 && (p.sum_energy() - q.sum_energy()).abs() < 1e-12);
        }
    }
}
