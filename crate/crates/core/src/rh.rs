//! Delta-shock Rankine-Hugoniot deficits and residuals for a generic flux.
//!
//! Jumps are taken as `[g] = g(-) - g(+)`, the `-` side being `{S < 0}` and
//! the normal pointing from `-` to `+`.

use crate::error::{ensure_finite, Error, Result};
use crate::fluxes::FluxModel;
use crate::vecops::{dot, norm};

/// One-sided limits of density and velocity on the front.
#[derive(Debug, Clone, PartialEq)]
pub struct SideStates {
    pub rho_minus: f64,
    pub rho_plus: f64,
    pub u_minus: Vec<f64>,
    pub u_plus: Vec<f64>,
}

impl SideStates {
    pub fn new(rho_minus: f64, u_minus: Vec<f64>, rho_plus: f64, u_plus: Vec<f64>) -> Result<Self> {
        let s = SideStates { rho_minus, rho_plus, u_minus, u_plus };
        s.validate()?;
        Ok(s)
    }

    /// One-dimensional states.
    pub fn scalar(rho_minus: f64, u_minus: f64, rho_plus: f64, u_plus: f64) -> Result<Self> {
        Self::new(rho_minus, vec![u_minus], rho_plus, vec![u_plus])
    }

    pub fn dim(&self) -> usize {
        self.u_minus.len()
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("side density", &[self.rho_minus, self.rho_plus])?;
        ensure_finite("side velocity", &self.u_minus)?;
        ensure_finite("side velocity", &self.u_plus)?;
        if self.rho_minus < 0.0 || self.rho_plus < 0.0 {
            return Err(Error::InvalidParameter("densities must be nonnegative".into()));
        }
        if self.u_minus.len() != self.u_plus.len() {
            return Err(Error::DimensionMismatch { expected: self.u_minus.len(), got: self.u_plus.len() });
        }
        Ok(())
    }

    /// The same interface seen from the other side.
    pub fn swapped(&self) -> SideStates {
        SideStates { rho_minus: self.rho_plus, rho_plus: self.rho_minus, u_minus: self.u_plus.clone(), u_plus: self.u_minus.clone() }
    }
}

/// Kinematic state of the front at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontState {
    pub e: f64,
    pub u_delta: Vec<f64>,
    pub nu: Vec<f64>,
    pub g: f64,
    pub k: f64,
}

impl FrontState {
    /// Builds the state with `U_delta = G nu`.
    pub fn new(e: f64, nu: Vec<f64>, g: f64, k: f64) -> Result<Self> {
        ensure_finite("front state", &[e, g, k])?;
        ensure_finite("front normal", &nu)?;
        if e < 0.0 {
            return Err(Error::InvalidParameter(format!("surface density e = {e} < 0")));
        }
        let len = norm(&nu);
        if (len - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("normal has length {len}")));
        }
        let u_delta = nu.iter().map(|v| g * v).collect();
        Ok(FrontState { e, u_delta, nu, g, k })
    }

    /// Planar 1-D front moving with speed `u_delta` along `nu = +1`.
    pub fn planar_1d(e: f64, u_delta: f64) -> Result<Self> {
        Self::new(e, vec![1.0], u_delta, 0.0)
    }

    pub fn dim(&self) -> usize {
        self.nu.len()
    }

    /// The same front with the normal reversed (`G` changes sign with it).
    pub fn flipped(&self) -> FrontState {
        FrontState { e: self.e, u_delta: self.u_delta.clone(), nu: self.nu.iter().map(|v| -v).collect(), g: -self.g, k: -self.k }
    }
}

/// Mass and momentum Rankine-Hugoniot deficits.
#[derive(Debug, Clone, PartialEq)]
pub struct RHDeficit {
    pub mass: f64,
    pub momentum: Vec<f64>,
}

fn check_dims(flux: &FluxModel, s: &SideStates, f: &FrontState) -> Result<()> {
    let n = flux.dim();
    for got in [s.dim(), f.dim()] {
        if got != n {
            return Err(Error::DimensionMismatch { expected: n, got });
        }
    }
    Ok(())
}

/// `([rho F(U)] - [rho] U_delta) . nu` and `([rho N(U)] - [rho U] U_delta) . nu`.
pub fn deficits(flux: &FluxModel, s: &SideStates, f: &FrontState) -> Result<RHDeficit> {
    check_dims(flux, s, f)?;
    let nu = &f.nu;
    let ud_nu = dot(&f.u_delta, nu);
    let jump_rho = s.rho_minus - s.rho_plus;
    let jump_flux_nu = s.rho_minus * flux.flux_dot(&s.u_minus, nu)? - s.rho_plus * flux.flux_dot(&s.u_plus, nu)?;
    let mass = jump_flux_nu - jump_rho * ud_nu;
    let nm = flux.tensor_dot(&s.u_minus, nu)?;
    let np = flux.tensor_dot(&s.u_plus, nu)?;
    let momentum = (0..flux.dim())
        .map(|k| {
            let jump_n = s.rho_minus * nm[k] - s.rho_plus * np[k];
            let jump_m = s.rho_minus * s.u_minus[k] - s.rho_plus * s.u_plus[k];
            jump_n - jump_m * ud_nu
        })
        .collect();
    Ok(RHDeficit { mass, momentum })
}

/// Deficits in the space-time form: contraction of `([rho F], [rho])` and
/// `([rho N], [rho U])` with `n = (nu, -G) = grad_(x,t) S / |grad S|`.
pub fn deficits_spacetime(flux: &FluxModel, s: &SideStates, f: &FrontState) -> Result<RHDeficit> {
    check_dims(flux, s, f)?;
    let n = flux.dim();
    let mut normal = f.nu.clone();
    normal.push(-f.g);
    let fm = flux.flux(&s.u_minus)?;
    let fp = flux.flux(&s.u_plus)?;
    let mut mass_vec: Vec<f64> = (0..n).map(|j| s.rho_minus * fm[j] - s.rho_plus * fp[j]).collect();
    mass_vec.push(s.rho_minus - s.rho_plus);
    let mass = dot(&mass_vec, &normal);
    let tm = flux.tensor(&s.u_minus)?;
    let tp = flux.tensor(&s.u_plus)?;
    let momentum = (0..n)
        .map(|k| {
            let mut row: Vec<f64> = (0..n).map(|j| s.rho_minus * tm[k * n + j] - s.rho_plus * tp[k * n + j]).collect();
            row.push(s.rho_minus * s.u_minus[k] - s.rho_plus * s.u_plus[k]);
            dot(&row, &normal)
        })
        .collect();
    Ok(RHDeficit { mass, momentum })
}

/// Residuals of
/// `de/dt - 2 K G e = mass deficit` and
/// `d(e U_delta)/dt - 2 K G e U_delta = momentum deficit`.
pub fn rh_residual(flux: &FluxModel, s: &SideStates, f: &FrontState, de_dt: f64, deu_dt: &[f64]) -> Result<(f64, Vec<f64>)> {
    let d = deficits(flux, s, f)?;
    if deu_dt.len() != d.momentum.len() {
        return Err(Error::DimensionMismatch { expected: d.momentum.len(), got: deu_dt.len() });
    }
    let curv = 2.0 * f.k * f.g * f.e;
    let mass = de_dt - curv - d.mass;
    let momentum = (0..d.momentum.len()).map(|k| deu_dt[k] - curv * f.u_delta[k] - d.momentum[k]).collect();
    Ok((mass, momentum))
}

/// Tangential part of the momentum deficit, `[rho U_tan F.nu] - [rho U_tan] G`.
/// Since `U_delta` is normal, this must vanish for a delta shock; it is a
/// constraint on the data rather than an equation for the front.
pub fn tangential_residual(flux: &FluxModel, s: &SideStates, f: &FrontState) -> Result<Vec<f64>> {
    let d = deficits(flux, s, f)?;
    let normal_part = dot(&d.momentum, &f.nu);
    Ok(d.momentum.iter().zip(&f.nu).map(|(m, n)| m - normal_part * n).collect())
}

/// Geometric entropy condition `U(+) . nu < U_delta . nu < U(-) . nu`.
pub fn entropy_ok(s: &SideStates, f: &FrontState, strict: bool) -> bool {
    let up = dot(&s.u_plus, &f.nu);
    let um = dot(&s.u_minus, &f.nu);
    let ud = dot(&f.u_delta, &f.nu);
    if strict {
        up < ud && ud < um
    } else {
        up <= ud && ud <= um
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fluxes::{relativistic_flux, standard_flux};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn std1() -> FluxModel {
        standard_flux(1).unwrap()
    }

    #[test]
    fn symmetric_riemann_deficits() {
        let s = SideStates::scalar(1.0, 1.0, 1.0, -1.0).unwrap();
        let f = FrontState::planar_1d(0.0, 0.0).unwrap();
        let d = deficits(&std1(), &s, &f).unwrap();
        assert_eq!(d.mass, 2.0);
        assert_eq!(d.momentum, vec![0.0]);
    }

    #[test]
    fn no_jump_no_deficit() {
        let s = SideStates::scalar(2.0, 0.3, 2.0, 0.3).unwrap();
        let f = FrontState::planar_1d(1.0, 0.3).unwrap();
        let d = deficits(&std1(), &s, &f).unwrap();
        assert_eq!(d.mass, 0.0);
        assert_eq!(d.momentum, vec![0.0]);
    }

    #[test]
    fn asymmetric_riemann_deficits() {
        let s = SideStates::scalar(4.0, 1.0, 1.0, -1.0).unwrap();
        let f = FrontState::planar_1d(0.0, 1.0 / 3.0).unwrap();
        let d = deficits(&std1(), &s, &f).unwrap();
        assert!((d.mass - 4.0).abs() < 1e-15);
        assert!((d.momentum[0] - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn residual_examples() {
        let s = SideStates::scalar(1.0, 1.0, 1.0, -1.0).unwrap();
        // e = 2t: de/dt = 2, e u_delta = 0
        let f = FrontState::planar_1d(2.0 * 0.7, 0.0).unwrap();
        let (m, p) = rh_residual(&std1(), &s, &f, 2.0, &[0.0]).unwrap();
        assert_eq!((m, p[0]), (0.0, 0.0));
        let z = SideStates::new(0.0, vec![0.0; 2], 0.0, vec![0.0; 2]).unwrap();
        let f = FrontState::new(0.0, vec![0.0, 1.0], 0.0, 0.0).unwrap();
        let (m, p) = rh_residual(&standard_flux(2).unwrap(), &z, &f, 0.0, &[0.0, 0.0]).unwrap();
        assert_eq!((m, p), (0.0, vec![0.0, 0.0]));
    }

    #[test]
    fn entropy_examples() {
        let s = SideStates::scalar(1.0, 1.0, 1.0, -1.0).unwrap();
        assert!(entropy_ok(&s, &FrontState::planar_1d(0.0, 0.0).unwrap(), true));
        assert!(entropy_ok(&s, &FrontState::planar_1d(0.0, 1.0 / 3.0).unwrap(), true));
        let r = SideStates::scalar(1.0, -1.0, 1.0, 1.0).unwrap();
        assert!(!entropy_ok(&r, &FrontState::planar_1d(0.0, 0.0).unwrap(), false));
        assert!(entropy_ok(&s, &FrontState::planar_1d(0.0, 1.0).unwrap(), false));
        assert!(!entropy_ok(&s, &FrontState::planar_1d(0.0, 1.0).unwrap(), true));
    }

    #[test]
    fn validation_errors() {
        assert!(SideStates::scalar(-1.0, 0.0, 1.0, 0.0).is_err());
        assert!(SideStates::scalar(f64::NAN, 0.0, 1.0, 0.0).is_err());
        assert!(FrontState::new(-1.0, vec![1.0], 0.0, 0.0).is_err());
        assert!(FrontState::new(1.0, vec![0.5, 0.5], 0.0, 0.0).is_err());
        let s = SideStates::scalar(1.0, 0.0, 1.0, 0.0).unwrap();
        let f = FrontState::new(0.0, vec![1.0, 0.0], 0.0, 0.0).unwrap();
        assert!(matches!(deficits(&std1(), &s, &f), Err(Error::DimensionMismatch { .. })));
    }

    fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let l = norm(&v);
            if l > 0.1 {
                return v.iter().map(|x| x / l).collect();
            }
        }
    }

    #[test]
    fn spacetime_and_normal_forms_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for i in 0..1000 {
            let n = 1 + i % 3;
            let flux = if i % 2 == 0 { standard_flux(n).unwrap() } else { relativistic_flux(n, rng.random_range(0.5..5.0)).unwrap() };
            let um: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
            let up: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
            let s = SideStates::new(rng.random_range(0.0..5.0), um, rng.random_range(0.0..5.0), up).unwrap();
            let f = FrontState::new(
                rng.random_range(0.0..2.0),
                random_unit(&mut rng, n),
                rng.random_range(-3.0..3.0),
                rng.random_range(-1.0..1.0),
            )
            .unwrap();
            let a = deficits(&flux, &s, &f).unwrap();
            let b = deficits_spacetime(&flux, &s, &f).unwrap();
            assert!((a.mass - b.mass).abs() <= 1e-12 * (1.0 + a.mass.abs()));
            for k in 0..n {
                assert!((a.momentum[k] - b.momentum[k]).abs() <= 1e-12 * (1.0 + a.momentum[k].abs()));
            }
        }
    }

    #[test]
    fn tangential_residual_detects_shear() {
        let flux = standard_flux(2).unwrap();
        let f = FrontState::new(0.0, vec![1.0, 0.0], 0.0, 0.0).unwrap();
        let normal_only = SideStates::new(1.0, vec![1.0, 0.0], 1.0, vec![-1.0, 0.0]).unwrap();
        let r = tangential_residual(&flux, &normal_only, &f).unwrap();
        assert!(r[0].abs() < 1e-15 && r[1].abs() < 1e-15);
        // tangential momentum carried in from both sides accumulates on the front
        let carried = SideStates::new(1.0, vec![1.0, 0.5], 1.0, vec![-1.0, 0.5]).unwrap();
        let r = tangential_residual(&flux, &carried, &f).unwrap();
        assert!((r[1] - 1.0).abs() < 1e-15);
        // opposite tangential fluxes cancel
        let cancel = SideStates::new(1.0, vec![1.0, 0.5], 1.0, vec![-1.0, -0.5]).unwrap();
        let r = tangential_residual(&flux, &cancel, &f).unwrap();
        assert!(r[1].abs() < 1e-15);
        let shear = SideStates::new(1.0, vec![1.0, 0.5], 1.0, vec![-1.0, 0.2]).unwrap();
        let r = tangential_residual(&flux, &shear, &f).unwrap();
        assert!((r[1] - 0.7).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn relabeling_sides_with_flipped_normal_leaves_deficits_unchanged(
            rm in 0.0f64..5.0, rp in 0.0f64..5.0,
            um in prop::collection::vec(-3.0f64..3.0, 2),
            up in prop::collection::vec(-3.0f64..3.0, 2),
            a in 0.0f64..std::f64::consts::TAU, g in -2.0f64..2.0, e in 0.0f64..2.0,
        ) {
            let flux = standard_flux(2).unwrap();
            let s = SideStates::new(rm, um, rp, up).unwrap();
            let f = FrontState::new(e, vec![a.cos(), a.sin()], g, 0.0).unwrap();
            let d1 = deficits(&flux, &s, &f).unwrap();
            let d2 = deficits(&flux, &s.swapped(), &f.flipped()).unwrap();
            prop_assert!((d1.mass - d2.mass).abs() < 1e-12);
            for k in 0..2 {
                prop_assert!((d1.momentum[k] - d2.momentum[k]).abs() < 1e-12);
            }
            // swapping sides alone reverses the jump
            let d3 = deficits(&flux, &s.swapped(), &f).unwrap();
            prop_assert!((d1.mass + d3.mass).abs() < 1e-12);
        }

        #[test]
        fn galilean_shift_preserves_zero_residual(
            rm in 0.1f64..5.0, rp in 0.1f64..5.0, um in -3.0f64..3.0, up in -3.0f64..3.0,
            tm in -2.0f64..2.0, a in 0.0f64..std::f64::consts::TAU, shift in -3.0f64..3.0, t in 0.1f64..3.0,
        ) {
            // planar front in 2-D; tangential velocities equal on both sides
            let flux = standard_flux(2).unwrap();
            let nu = vec![a.cos(), a.sin()];
            let tau = [-a.sin(), a.cos()];
            let vel = |n: f64| vec![n * nu[0] + tm * tau[0], n * nu[1] + tm * tau[1]];
            let s = SideStates::new(rm, vel(um), rp, vel(up)).unwrap();
            let g = 0.3 * um + 0.7 * up;
            let f = FrontState::new(1.0, nu.clone(), g, 0.0).unwrap();
            let d = deficits(&flux, &s, &f).unwrap();
            // choose rates that zero the residual, then shift everything by c = shift * nu
            let (m0, p0) = rh_residual(&flux, &s, &f, d.mass, &d.momentum).unwrap();
            prop_assert!(m0.abs() < 1e-12 && p0.iter().all(|v| v.abs() < 1e-12));
            let c: Vec<f64> = nu.iter().map(|v| shift * v).collect();
            let s2 = SideStates::new(rm, crate::vecops::add(&s.u_minus, &c), rp, crate::vecops::add(&s.u_plus, &c)).unwrap();
            let f2 = FrontState::new(1.0, nu.clone(), g + shift, 0.0).unwrap();
            let deu: Vec<f64> = (0..2).map(|k| d.momentum[k] + c[k] * d.mass).collect();
            let (m1, p1) = rh_residual(&flux, &s2, &f2, d.mass, &deu).unwrap();
            let _ = t;
            prop_assert!(m1.abs() < 1e-11, "mass {}", m1);
            prop_assert!(p1.iter().all(|v| v.abs() < 1e-11), "{:?}", p1);
        }
    }
}
