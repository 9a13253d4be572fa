//! Event-driven sticky-particle dynamics: an independent oracle for the
//! delta-shock solvers.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::riemann1d::RiemannData1D;
use crate::spherical::{sphere_measure, RadialField, SphericalFrontState};
use crate::tolerances::{NEGATIVE_EVENT_TIME, SIMULTANEOUS_EVENTS};

/// Particles sorted by position.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSystem {
    pub positions: Vec<f64>,
    pub velocities: Vec<f64>,
    pub masses: Vec<f64>,
    pub time: f64,
}

impl ParticleSystem {
    pub fn new(positions: Vec<f64>, velocities: Vec<f64>, masses: Vec<f64>, time: f64) -> Result<Self> {
        let n = positions.len();
        if velocities.len() != n || masses.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: velocities.len().min(masses.len()) });
        }
        if positions.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidParameter("positions must be strictly increasing".into()));
        }
        if masses.iter().any(|m| !(*m > 0.0 && m.is_finite())) || velocities.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("masses must be positive and velocities finite".into()));
        }
        Ok(ParticleSystem { positions, velocities, masses, time })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn total_momentum(&self) -> f64 {
        self.masses.iter().zip(&self.velocities).map(|(m, v)| m * v).sum()
    }

    pub fn kinetic_energy(&self) -> f64 {
        0.5 * self.masses.iter().zip(&self.velocities).map(|(m, v)| m * v * v).sum::<f64>()
    }

    /// Index of the heaviest particle.
    pub fn heaviest(&self) -> Option<usize> {
        (0..self.len()).max_by(|&a, &b| self.masses[a].total_cmp(&self.masses[b]))
    }

    pub fn median_mass(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let mut m = self.masses.clone();
        m.sort_by(|a, b| a.total_cmp(b));
        m[m.len() / 2]
    }
}

fn check_sampling(l: f64, n: usize) -> Result<()> {
    if n < 100 {
        return Err(Error::Undersampled(format!("N = {n} < 100")));
    }
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::InvalidParameter("L must be positive".into()));
    }
    Ok(())
}

fn riemann_particles<I: Iterator<Item = f64>>(d: &RiemannData1D, offsets: I, dx: f64) -> Result<ParticleSystem> {
    let (mut x, mut v, mut m) = (vec![], vec![], vec![]);
    for s in offsets {
        let (rho, u) = if s < 0.0 { (d.rho_l, d.u_l) } else { (d.rho_r, d.u_r) };
        if rho > 0.0 {
            x.push(d.x0 + s);
            v.push(u);
            m.push(rho * dx);
        }
    }
    let mut ps = ParticleSystem::new(x, v, m, 0.0)?;
    if d.e0 > 0.0 {
        insert_particle(&mut ps, d.x0, d.u_delta0.unwrap_or_default(), d.e0);
    }
    Ok(ps)
}

/// Inserts a particle, merging it into an existing one at the same position.
fn insert_particle(ps: &mut ParticleSystem, x: f64, v: f64, m: f64) -> usize {
    let k = ps.positions.partition_point(|p| *p < x);
    if k < ps.len() && ps.positions[k] == x {
        let p = ps.masses[k] * ps.velocities[k] + m * v;
        ps.masses[k] += m;
        ps.velocities[k] = p / ps.masses[k];
    } else {
        ps.positions.insert(k, x);
        ps.velocities.insert(k, v);
        ps.masses.insert(k, m);
    }
    k
}

/// Midpoint sampling of the Riemann data on `[x0 - L, x0 + L]` with `N`
/// cells of width `2L/N`; an initial point mass becomes one particle at `x0`.
pub fn sample_riemann(d: &RiemannData1D, l: f64, n: usize) -> Result<ParticleSystem> {
    check_sampling(l, n)?;
    let dx = 2.0 * l / n as f64;
    riemann_particles(d, (0..n).map(|k| -l + (k as f64 + 0.5) * dx), dx)
}

/// Jittered sampling: one particle uniformly placed in each cell.
pub fn sample_riemann_random(d: &RiemannData1D, l: f64, n: usize, seed: u64) -> Result<ParticleSystem> {
    check_sampling(l, n)?;
    let dx = 2.0 * l / n as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let offsets: Vec<f64> = (0..n)
        .map(|k| {
            let s = -l + (k as f64 + rng.random_range(0.05..0.95)) * dx;
            // keep each particle on the side of its cell
            if (k as f64 + 0.5) * dx < l {
                s.min(-1e-15)
            } else {
                s.max(0.0)
            }
        })
        .collect();
    riemann_particles(d, offsets.into_iter(), dx)
}

#[derive(Debug, Clone, Copy)]
struct Event {
    t: f64,
    i: usize,
    j: usize,
    vi: u32,
    vj: u32,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Event {}
impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Event {
    // reversed: BinaryHeap pops the earliest event
    fn cmp(&self, other: &Self) -> Ordering {
        other.t.total_cmp(&self.t).then_with(|| other.i.cmp(&self.i))
    }
}

const NONE: usize = usize::MAX;

/// Incremental simulator; particles keep their original index as identity.
#[derive(Debug, Clone)]
pub struct Simulator {
    x_ref: Vec<f64>,
    t_ref: Vec<f64>,
    v: Vec<f64>,
    m: Vec<f64>,
    alive: Vec<bool>,
    prev: Vec<usize>,
    next: Vec<usize>,
    version: Vec<u32>,
    parent: Vec<usize>,
    heap: BinaryHeap<Event>,
    time: f64,
    head: usize,
    merges: usize,
}

impl Simulator {
    pub fn new(ps: &ParticleSystem) -> Result<Self> {
        let n = ps.len();
        let mut s = Simulator {
            x_ref: ps.positions.clone(),
            t_ref: vec![ps.time; n],
            v: ps.velocities.clone(),
            m: ps.masses.clone(),
            alive: vec![true; n],
            prev: (0..n).map(|i| if i == 0 { NONE } else { i - 1 }).collect(),
            next: (0..n).map(|i| if i + 1 == n { NONE } else { i + 1 }).collect(),
            version: vec![0; n],
            parent: (0..n).collect(),
            heap: BinaryHeap::new(),
            time: ps.time,
            head: if n == 0 { NONE } else { 0 },
            merges: 0,
        };
        for i in 1..n {
            s.schedule(i - 1, i)?;
        }
        Ok(s)
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn merges(&self) -> usize {
        self.merges
    }

    fn position(&self, i: usize, t: f64) -> f64 {
        self.x_ref[i] + self.v[i] * (t - self.t_ref[i])
    }

    fn schedule(&mut self, i: usize, j: usize) -> Result<()> {
        if i == NONE || j == NONE || self.v[i] <= self.v[j] {
            return Ok(());
        }
        let gap = self.position(j, self.time) - self.position(i, self.time);
        let dt = gap / (self.v[i] - self.v[j]);
        if dt < -NEGATIVE_EVENT_TIME {
            return Err(Error::EventQueue(format!("particles {i} and {j} overlap by {} at t = {}", -gap, self.time)));
        }
        self.heap.push(Event { t: self.time + dt.max(0.0), i, j, vi: self.version[i], vj: self.version[j] });
        Ok(())
    }

    fn valid(&self, e: &Event) -> bool {
        self.alive[e.i] && self.alive[e.j] && self.version[e.i] == e.vi && self.version[e.j] == e.vj && self.next[e.i] == e.j
    }

    /// Surviving particle that absorbed `id`.
    pub fn representative(&self, mut id: usize) -> usize {
        while self.parent[id] != id {
            id = self.parent[id];
        }
        id
    }

    fn merge(&mut self, a: usize, b: usize, t: f64) {
        let (xa, xb) = (self.position(a, t), self.position(b, t));
        let (ma, mb) = (self.m[a], self.m[b]);
        let mass = ma + mb;
        self.x_ref[a] = (ma * xa + mb * xb) / mass;
        self.v[a] = (ma * self.v[a] + mb * self.v[b]) / mass;
        self.m[a] = mass;
        self.t_ref[a] = t;
        self.version[a] += 1;
        self.alive[b] = false;
        self.parent[b] = a;
        let nb = self.next[b];
        self.next[a] = nb;
        if nb != NONE {
            self.prev[nb] = a;
        }
        self.merges += 1;
    }

    /// Processes every collision up to time `t_end`.
    pub fn advance_to(&mut self, t_end: f64) -> Result<()> {
        if t_end < self.time {
            return Err(Error::InvalidParameter(format!("cannot run backwards from {} to {t_end}", self.time)));
        }
        let mut batch: Vec<Event> = Vec::new();
        let mut touched: Vec<usize> = Vec::new();
        while let Some(first) = self.heap.peek().copied() {
            if first.t > t_end {
                break;
            }
            self.heap.pop();
            if !self.valid(&first) {
                continue;
            }
            batch.clear();
            batch.push(first);
            while let Some(e) = self.heap.peek().copied() {
                if e.t > first.t + SIMULTANEOUS_EVENTS {
                    break;
                }
                self.heap.pop();
                if self.valid(&e) {
                    batch.push(e);
                }
            }
            let t_event = first.t;
            self.time = t_event;
            batch.sort_by_key(|e| e.i);
            touched.clear();
            for e in &batch {
                let a = self.representative(e.i);
                if !self.alive[e.j] || self.next[a] != e.j {
                    continue;
                }
                self.merge(a, e.j, t_event);
                touched.push(a);
            }
            touched.dedup();
            for &a in &touched {
                if !self.alive[a] {
                    continue;
                }
                self.schedule(self.prev[a], a)?;
                self.schedule(a, self.next[a])?;
            }
        }
        self.time = t_end;
        Ok(())
    }

    /// Live particles at the current time, with their original indices.
    pub fn snapshot_with_ids(&self) -> (ParticleSystem, Vec<usize>) {
        let (mut x, mut v, mut m, mut ids) = (vec![], vec![], vec![], vec![]);
        let mut i = self.head;
        while i != NONE {
            x.push(self.position(i, self.time));
            v.push(self.v[i]);
            m.push(self.m[i]);
            ids.push(i);
            i = self.next[i];
        }
        (ParticleSystem { positions: x, velocities: v, masses: m, time: self.time }, ids)
    }

    pub fn snapshot(&self) -> ParticleSystem {
        self.snapshot_with_ids().0
    }

    /// `(position, mass, velocity)` of the cluster containing particle `id`.
    pub fn cluster_of(&self, id: usize) -> (f64, f64, f64) {
        let r = self.representative(id);
        (self.position(r, self.time), self.m[r], self.v[r])
    }
}

/// Runs the system up to time `t_end`.
pub fn run_until(ps: &ParticleSystem, t_end: f64) -> Result<ParticleSystem> {
    let mut sim = Simulator::new(ps)?;
    sim.advance_to(t_end)?;
    Ok(sim.snapshot())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterSample {
    pub t: f64,
    pub position: f64,
    pub mass: f64,
    pub velocity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterEstimate {
    /// Velocity of the dominant cluster at the last requested time.
    pub u_delta_hat: f64,
    pub history: Vec<ClusterSample>,
}

/// Tracks the heaviest cluster at each of the increasing `times`.
pub fn delta_cluster_estimate(ps: &ParticleSystem, times: &[f64]) -> Result<ClusterEstimate> {
    if times.is_empty() {
        return Err(Error::InvalidParameter("no sample times".into()));
    }
    let mut sim = Simulator::new(ps)?;
    let mut history = Vec::with_capacity(times.len());
    let mut last = None;
    for &t in times {
        sim.advance_to(t)?;
        let snap = sim.snapshot();
        let k = snap.heaviest().ok_or_else(|| Error::NotConverged("no particles".into()))?;
        history.push(ClusterSample { t, position: snap.positions[k], mass: snap.masses[k], velocity: snap.velocities[k] });
        last = Some(snap);
    }
    let snap = last.expect("times is non-empty");
    let k = snap.heaviest().expect("non-empty");
    if snap.masses[k] < 10.0 * snap.median_mass() {
        return Err(Error::NotConverged(format!(
            "heaviest cluster mass {} is below ten times the median {}",
            snap.masses[k],
            snap.median_mass()
        )));
    }
    Ok(ClusterEstimate { u_delta_hat: snap.velocities[k], history })
}

/// Radial shells for a spherical front: cell midpoints on `annulus`, mass
/// `rho |S^(n-1)| r^(n-1) dr`, plus one shell carrying the initial front
/// mass. Returns the system and the index of the front shell.
pub fn radial_shells(
    inner: &RadialField,
    outer: &RadialField,
    init: &SphericalFrontState,
    n: usize,
    shells: usize,
    annulus: (f64, f64),
) -> Result<(ParticleSystem, Option<usize>)> {
    let (lo, hi) = annulus;
    if n < 2 {
        return Err(Error::InvalidDimension("radial shells need n >= 2".into()));
    }
    if !(0.0 <= lo && lo < init.phi && init.phi < hi) {
        return Err(Error::InvalidParameter(format!("annulus [{lo}, {hi}] must contain the front")));
    }
    if shells < 100 {
        return Err(Error::Undersampled(format!("{shells} shells")));
    }
    let area = sphere_measure(n);
    let dr = (hi - lo) / shells as f64;
    let (mut x, mut v, mut m) = (vec![], vec![], vec![]);
    for k in 0..shells {
        let r = lo + (k as f64 + 0.5) * dr;
        let field = if r < init.phi { inner } else { outer };
        let (rho, u) = field.eval(r, init.t, n)?;
        let mass = rho * area * r.powi(n as i32 - 1) * dr;
        if mass > 0.0 {
            x.push(r);
            v.push(u);
            m.push(mass);
        }
    }
    let mut ps = ParticleSystem::new(x, v, m, init.t)?;
    let front_mass = init.e * area * init.phi.powi(n as i32 - 1);
    let front = if front_mass > 0.0 { Some(insert_particle(&mut ps, init.phi, init.u_delta, front_mass)) } else { None };
    Ok((ps, front))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialOracleRun {
    pub samples: Vec<ClusterSample>,
    /// The tracked cluster reached `r_min` before the last requested time.
    pub truncated: bool,
}

/// Sticky-shell trajectory of the cluster holding the front shell (the
/// heaviest cluster when the front starts massless).
#[allow(clippy::too_many_arguments)]
pub fn radial_oracle(
    inner: &RadialField,
    outer: &RadialField,
    init: &SphericalFrontState,
    n: usize,
    shells: usize,
    annulus: (f64, f64),
    times: &[f64],
    r_min: f64,
) -> Result<RadialOracleRun> {
    let (ps, front) = radial_shells(inner, outer, init, n, shells, annulus)?;
    let mut sim = Simulator::new(&ps)?;
    let mut samples = Vec::with_capacity(times.len());
    for &t in times {
        sim.advance_to(t)?;
        let (position, mass, velocity) = match front {
            Some(id) => sim.cluster_of(id),
            None => {
                let snap = sim.snapshot();
                let k = snap.heaviest().ok_or_else(|| Error::NotConverged("no shells".into()))?;
                (snap.positions[k], snap.masses[k], snap.velocities[k])
            }
        };
        if position <= r_min {
            return Ok(RadialOracleRun { samples, truncated: true });
        }
        samples.push(ClusterSample { t, position, mass, velocity });
    }
    Ok(RadialOracleRun { samples, truncated: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fluxes::standard_flux;
    use proptest::prelude::{prop_assert, proptest, ProptestConfig};

    fn data(rl: f64, ul: f64, rr: f64, ur: f64) -> RiemannData1D {
        RiemannData1D::new(rl, ul, rr, ur, standard_flux(1).unwrap()).unwrap()
    }

    #[test]
    fn sampling_masses() {
        let ps = sample_riemann(&data(1.0, 1.0, 1.0, -1.0), 1.0, 200).unwrap();
        assert_eq!(ps.len(), 200);
        assert!((ps.total_mass() - 2.0).abs() < 1e-12);
        let ps = sample_riemann(&data(4.0, 1.0, 1.0, -1.0), 1.0, 200).unwrap();
        assert!((ps.total_mass() - 5.0).abs() < 1e-12);
        let ps = sample_riemann(&data(1.0, 1.0, 0.0, 0.0), 1.0, 200).unwrap();
        assert!(ps.positions.iter().all(|x| *x < 0.0));
        assert!(matches!(sample_riemann(&data(1.0, 1.0, 1.0, -1.0), 1.0, 10), Err(Error::Undersampled(_))));
        let r = sample_riemann_random(&data(4.0, 1.0, 1.0, -1.0), 1.0, 200, 3).unwrap();
        assert!((r.total_mass() - 5.0).abs() < 1e-12);
        assert_eq!(r, sample_riemann_random(&data(4.0, 1.0, 1.0, -1.0), 1.0, 200, 3).unwrap());
    }

    #[test]
    fn two_particle_merges() {
        let ps = ParticleSystem::new(vec![-1.0, 1.0], vec![1.0, -1.0], vec![1.0, 1.0], 0.0).unwrap();
        let out = run_until(&ps, 2.0).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!((out.masses[0], out.velocities[0], out.positions[0]), (2.0, 0.0, 0.0));
        let ps = ParticleSystem::new(vec![-1.0, 1.0], vec![1.0, -1.0], vec![4.0, 1.0], 0.0).unwrap();
        let out = run_until(&ps, 2.0).unwrap();
        assert!((out.velocities[0] - 0.6).abs() < 1e-15);
        assert!((out.positions[0] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn separating_particles_do_nothing() {
        let ps = ParticleSystem::new(vec![-1.0, 1.0], vec![-1.0, 1.0], vec![1.0, 1.0], 0.0).unwrap();
        let out = run_until(&ps, 3.0).unwrap();
        assert_eq!(out.positions, vec![-4.0, 4.0]);
        assert!(run_until(&ps, -1.0).is_err());
    }

    #[test]
    fn simultaneous_triple_collision() {
        let ps = ParticleSystem::new(vec![-1.0, 0.0, 1.0], vec![1.0, 0.0, -1.0], vec![1.0, 1.0, 1.0], 0.0).unwrap();
        let mut sim = Simulator::new(&ps).unwrap();
        sim.advance_to(2.0).unwrap();
        let out = sim.snapshot();
        assert_eq!(out.len(), 1);
        assert_eq!(out.masses[0], 3.0);
        assert_eq!(sim.representative(2), 0);
    }

    #[test]
    fn symmetric_cluster() {
        let ps = sample_riemann(&data(1.0, 1.0, 1.0, -1.0), 2.0, 20_000).unwrap();
        let est = delta_cluster_estimate(&ps, &[0.5, 1.0]).unwrap();
        assert!(est.u_delta_hat.abs() < 1e-12);
        assert!((est.history[1].mass - 2.0).abs() < 1e-3);
        assert!((est.history[0].mass - 1.0).abs() < 1e-3);
    }

    #[test]
    fn rarefaction_has_no_cluster() {
        let ps = sample_riemann(&data(1.0, -1.0, 1.0, 1.0), 1.0, 1000).unwrap();
        assert!(matches!(delta_cluster_estimate(&ps, &[1.0]), Err(Error::NotConverged(_))));
    }

    #[test]
    fn initial_point_mass_is_a_particle() {
        let d = data(1.0, 1.0, 1.0, -1.0).with_point_mass(0.5, 0.2).unwrap();
        let ps = sample_riemann(&d, 1.0, 200).unwrap();
        assert!((ps.total_mass() - 2.5).abs() < 1e-12);
        assert!((ps.total_momentum() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn static_shells_do_not_merge() {
        let f = RadialField::constant(1.0, 0.0).unwrap();
        let init = SphericalFrontState { t: 0.0, phi: 1.0, e: 0.0, u_delta: 0.0 };
        let (ps, front) = radial_shells(&f, &f, &init, 3, 200, (0.5, 1.5)).unwrap();
        assert!(front.is_none());
        let mut sim = Simulator::new(&ps).unwrap();
        sim.advance_to(5.0).unwrap();
        assert_eq!(sim.merges(), 0);
        assert!((ps.total_mass() - 4.0 / 3.0 * std::f64::consts::PI * (1.5f64.powi(3) - 0.125)).abs() < 1e-4);
    }

    #[test]
    fn single_front_shell_is_the_cluster() {
        let v = RadialField::vacuum();
        let init = SphericalFrontState { t: 0.0, phi: 1.0, e: 1.0, u_delta: -0.25 };
        let run = radial_oracle(&v, &v, &init, 2, 100, (0.0, 2.0), &[1.0, 2.0, 5.0], 0.1).unwrap();
        assert_eq!(run.samples.len(), 2);
        assert!(run.truncated);
        assert!((run.samples[1].position - 0.5).abs() < 1e-15);
        assert!((run.samples[0].mass - 2.0 * std::f64::consts::PI).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn conservation_and_energy_decay(seed in 0u64..1000, n in 2usize..60) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
            x.sort_by(|a, b| a.total_cmp(b));
            x.dedup();
            let v: Vec<f64> = x.iter().map(|_| rng.random_range(-2.0..2.0)).collect();
            let m: Vec<f64> = x.iter().map(|_| rng.random_range(0.1..3.0)).collect();
            let ps = ParticleSystem::new(x, v, m, 0.0).unwrap();
            let mut sim = Simulator::new(&ps).unwrap();
            let mut energy = ps.kinetic_energy();
            let mut merges = 0;
            for k in 1..=20 {
                sim.advance_to(0.5 * k as f64).unwrap();
                let s = sim.snapshot();
                prop_assert!((s.total_mass() - ps.total_mass()).abs() <= 1e-12 * ps.total_mass());
                prop_assert!((s.total_momentum() - ps.total_momentum()).abs() <= 1e-10 * (1.0 + ps.total_mass() * 2.0));
                prop_assert!(s.positions.windows(2).all(|w| w[0] <= w[1] + 1e-12));
                let e = s.kinetic_energy();
                prop_assert!(e <= energy + 1e-12);
                if sim.merges() > merges {
                    prop_assert!(e < energy);
                }
                merges = sim.merges();
                energy = e;
            }
        }
    }
}
