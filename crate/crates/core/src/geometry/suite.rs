//! Fixed battery of closed-form geometry checks: sphere curvature, surface
//! and volume transport convergence, and integration by parts on a
//! translating plane.

use serde::Serialize;

use super::{check_integration_by_parts, check_surface_transport, check_volume_transport, mean_curvature_with_step};
use super::{FdSteps, LevelSetFront, MovingRegion, MovingSurface, RadiusLaw};
use crate::error::Result;
use crate::testfn::{BumpFactor, TestFunction};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteCheck {
    pub name: String,
    pub value: f64,
    pub expected: f64,
    /// `|value - expected|`, or the observed order for convergence rows.
    pub error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

fn row(name: String, value: f64, expected: f64, tolerance: f64) -> SuiteCheck {
    let error = (value - expected).abs();
    SuiteCheck { name, value, expected, error, tolerance, passed: error <= tolerance }
}

/// Residuals at steps `dt = h = s, s/2, s/4` and the observed order from the
/// last halving.
fn order_rows(name: &str, residual: impl Fn(f64) -> Result<f64>, order: f64) -> Result<Vec<SuiteCheck>> {
    let steps = [4e-2, 2e-2, 1e-2];
    let r = steps.iter().map(|s| residual(*s)).collect::<Result<Vec<_>>>()?;
    let mut out: Vec<SuiteCheck> = steps
        .iter()
        .zip(&r)
        .map(|(s, v)| SuiteCheck {
            name: format!("{name}_residual_step_{s:e}"),
            value: *v,
            expected: 0.0,
            error: *v,
            tolerance: f64::INFINITY,
            passed: v.is_finite(),
        })
        .collect();
    let observed = (r[1] / r[2]).log2();
    out.push(SuiteCheck {
        name: format!("{name}_order"),
        value: observed,
        expected: order,
        error: observed,
        tolerance: order - 0.2,
        passed: observed >= order - 0.2 && r[2] < r[1] && r[1] < r[0],
    });
    Ok(out)
}

pub fn run_suite() -> Result<Vec<SuiteCheck>> {
    let mut out = Vec::new();
    for n in [2usize, 3] {
        for r in [0.5, 1.0, 2.0] {
            let center = vec![0.0; n];
            let front = LevelSetFront::sphere(&center, RadiusLaw::constant(r))?;
            let mut x = vec![0.0; n];
            x[0] = r;
            let k = mean_curvature_with_step(&front, &x, 0.0, 1e-5)?;
            out.push(row(format!("sphere_curvature_n{n}_r{r}"), k, -(n as f64 - 1.0) / (2.0 * r), 1e-8));
        }
    }

    let circle = MovingSurface::Sphere { center: vec![0.0, 0.0], radius: RadiusLaw::affine(1.0, -0.5) };
    let e = |x: &[f64], t: f64| (1.0 + x[0] * x[0]) * (1.0 + t).powi(3);
    out.extend(order_rows(
        "shrinking_circle_surface_transport",
        |s| {
            let steps = FdSteps { dt: s, h: s, order: 16 };
            Ok(check_surface_transport(&e, &circle, 0.2, steps)?.residual())
        },
        2.0,
    )?);

    let ball = MovingRegion::Ball { center: vec![0.0, 0.0, 0.0], radius: RadiusLaw::affine(1.0, 1.0) };
    let f = |x: &[f64], t: f64| (1.0 + x[0] * x[0] + x[1] * x[2]) * (1.0 + t).powi(3);
    out.extend(order_rows(
        "growing_ball_volume_transport",
        |s| {
            let steps = FdSteps { dt: s, h: s, order: 16 };
            Ok(check_volume_transport(&f, &ball, 0.3, steps)?.residual())
        },
        2.0,
    )?);

    let plane = MovingSurface::Plane { normal: vec![0.6, 0.8], offset: -0.2, speed: 0.5, window: vec![] };
    let phi = TestFunction {
        space: vec![BumpFactor::plain(0.1, 1.0), BumpFactor::plain(-0.2, 1.0)],
        time: BumpFactor::plain(0.3, 0.6),
        amplitude: 1.0,
    };
    let g = |x: &[f64], t: f64| 1.0 + 0.5 * x[0] - 0.25 * x[1] * x[1] + t;
    let ibp = check_integration_by_parts(&g, &phi, &plane, 1.0, &[(-1.5, 1.5), (-1.5, 1.5)], FdSteps::default(), 8)?;
    out.push(row("translating_plane_integration_by_parts".into(), ibp.lhs, ibp.rhs, 1e-6));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes() {
        let rows = run_suite().unwrap();
        for r in &rows {
            assert!(r.passed, "{r:?}");
        }
        assert_eq!(rows.len(), 6 + 4 + 4 + 1);
    }
}
