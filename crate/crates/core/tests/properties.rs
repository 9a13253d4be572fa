use proptest::prelude::*;

use dshock::balance::{audit, AuditOptions};
use dshock::rh::{rh_residual, FrontState, SideStates};
use dshock::riemann1d::{solve_constant_states, RiemannData1D};
use dshock::scenario::{planar_run, PlanarProblem, Problem, Scenario};
use dshock::solution::PlanarSolution;
use dshock::{relativistic_flux, standard_flux, FluxSpec};

fn data(rl: f64, rr: f64, ur: f64, du: f64, e0: f64, s: f64) -> RiemannData1D {
    let ul = ur + du;
    let d = RiemannData1D::new(rl, ul, rr, ur, standard_flux(1).unwrap()).unwrap();
    if e0 > 0.0 {
        // initial speed anywhere inside the entropy band
        d.with_point_mass(e0, ur + s * du).unwrap()
    } else {
        d
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn paths_satisfy_the_jump_odes(rl in 0.1f64..5.0, rr in 0.1f64..5.0, ur in -2.0f64..2.0, du in 0.05f64..3.0,
                                   e0 in prop_oneof![Just(0.0), 0.1f64..2.0], s in 0.05f64..0.95, t in 0.1f64..3.0) {
        let d = data(rl, rr, ur, du, e0, s);
        let p = solve_constant_states(&d).unwrap();
        let q = p.at(t).unwrap();
        prop_assert!(d.u_r <= q.u_delta && q.u_delta <= d.u_l);
        let h = 1e-5;
        let (a, b) = (p.at(t - h).unwrap(), p.at(t + h).unwrap());
        let de = (b.e - a.e) / (2.0 * h);
        let dm = (b.e * b.u_delta - a.e * a.u_delta) / (2.0 * h);
        prop_assert!(de >= 0.0);
        let sides = SideStates::scalar(d.rho_l, d.u_l, d.rho_r, d.u_r).unwrap();
        let front = FrontState::planar_1d(q.e, q.u_delta).unwrap();
        let (rm, rp) = rh_residual(&standard_flux(1).unwrap(), &sides, &front, de, &[dm]).unwrap();
        let scale = 1.0 + rl.max(rr) * (ur.abs() + du).powi(2);
        prop_assert!(rm.abs() < 1e-6 * scale && rp[0].abs() < 1e-6 * scale, "{rm} {rp:?}");
    }

    #[test]
    fn closed_form_runs_conserve_and_dissipate(rl in 0.1f64..5.0, rr in 0.1f64..5.0, ur in -2.0f64..2.0, du in 0.05f64..3.0,
                                               e0 in prop_oneof![Just(0.0), 0.1f64..2.0], s in 0.05f64..0.95) {
        let sol = PlanarSolution::solve_riemann(&data(rl, rr, ur, du, e0, s)).unwrap().with_support(-8.0, 8.0).unwrap();
        let times: Vec<f64> = (0..=10).map(|k| 0.1 * k as f64).collect();
        let report = audit(&sol, &times, &AuditOptions::default()).unwrap();
        for c in &report.checks {
            prop_assert!(c.passed, "{c:?}");
        }
    }

    #[test]
    fn relativistic_speed_stays_in_the_band_and_converges(rl in 0.1f64..5.0, rr in 0.1f64..5.0, ur in -2.0f64..2.0, du in 0.05f64..3.0) {
        let ul = ur + du;
        let standard = solve_constant_states(&data(rl, rr, ur, du, 0.0, 0.0)).unwrap().u_delta(0.0).unwrap();
        let mut last = f64::INFINITY;
        for c0 in [10.0, 100.0, 1000.0] {
            let d = RiemannData1D::new(rl, ul, rr, ur, relativistic_flux(1, c0).unwrap()).unwrap();
            let u = solve_constant_states(&d).unwrap().u_delta(0.0).unwrap();
            prop_assert!(ur <= u && u <= ul);
            let gap = (u - standard).abs();
            prop_assert!(gap <= last * 1.0001 + 1e-14);
            last = gap;
        }
    }

    #[test]
    fn planar_runs_rotate_with_the_frame(angle in 0.0f64..std::f64::consts::TAU, rl in 0.1f64..5.0, rr in 0.1f64..5.0,
                                         ur in -2.0f64..2.0, du in 0.05f64..3.0, vm in -1.0f64..1.0, vp in -1.0f64..1.0) {
        let rot = |v: [f64; 2]| vec![angle.cos() * v[0] - angle.sin() * v[1], angle.sin() * v[0] + angle.cos() * v[1]];
        let scenario = |normal: Vec<f64>, um: Vec<f64>, up: Vec<f64>| Scenario {
            name: "p".into(),
            flux: FluxSpec::default(),
            seed: 0,
            output: None,
            tolerances: Default::default(),
            problem: Problem::Planar(PlanarProblem {
                normal,
                rho_minus: rl,
                u_minus: um,
                rho_plus: rr,
                u_plus: up,
                x0: 0.0,
                t_end: 1.0,
                samples: 5,
                support: None,
            }),
        };
        let run = |s: &Scenario| match &s.problem {
            Problem::Planar(p) => planar_run(s, p).unwrap(),
            _ => unreachable!(),
        };
        let (um, up) = ([ur + du, vm], [ur, vp]);
        let a = run(&scenario(vec![1.0, 0.0], um.to_vec(), up.to_vec()));
        let b = run(&scenario(rot([1.0, 0.0]), rot(um), rot(up)));
        for (p, q) in a.rows.iter().zip(&b.rows) {
            prop_assert!((p.phi - q.phi).abs() < 1e-12 && (p.e - q.e).abs() < 1e-12);
            let ud = rot([p.u_delta[0], p.u_delta[1]]);
            prop_assert!((ud[0] - q.u_delta[0]).abs() < 1e-12 && (ud[1] - q.u_delta[1]).abs() < 1e-12);
        }
        let t = rot([a.tangential[0], a.tangential[1]]);
        prop_assert!((t[0] - b.tangential[0]).abs() < 1e-11 && (t[1] - b.tangential[1]).abs() < 1e-11);
    }
}
