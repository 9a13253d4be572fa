//! Adaptive Dormand-Prince 5(4) integrator.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { rtol: 1e-9, atol: 1e-12, h_init: 0.0, h_min: 1e-14, h_max: f64::INFINITY, max_steps: 1_000_000 }
    }
}

/// Returned by the step observer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdeRun {
    /// Accepted output samples `(t, y)`, starting with the initial state.
    pub samples: Vec<(f64, Vec<f64>)>,
    /// True when the observer asked to stop before the last output time.
    pub stopped: bool,
    pub steps: usize,
    pub rejected: usize,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn lin(y: &[f64], h: f64, terms: &[(f64, &[f64])], out: &mut [f64]) {
    for i in 0..y.len() {
        let mut s = 0.0;
        for (c, k) in terms {
            s += c * k[i];
        }
        out[i] = y[i] + h * s;
    }
}

/// Integrates `y' = f(t, y)` from `t0`, landing exactly on every time in
/// `t_out` (strictly increasing, all `> t0`). `observe` sees every accepted
/// step and may stop the run; the stopping state is appended to the samples.
pub fn solve<F, O>(mut f: F, t0: f64, y0: &[f64], t_out: &[f64], opts: &OdeOptions, mut observe: O) -> Result<OdeRun>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    O: FnMut(f64, &[f64]) -> Result<Control>,
{
    if !(opts.rtol > 0.0 && opts.atol >= 0.0) {
        return Err(Error::InvalidParameter("ODE tolerances must be positive".into()));
    }
    let mut prev = t0;
    for &t in t_out {
        if !(t > prev) || !t.is_finite() {
            return Err(Error::InvalidParameter("output times must be finite and strictly increasing".into()));
        }
        prev = t;
    }
    let n = y0.len();
    let mut run = OdeRun { samples: vec![(t0, y0.to_vec())], stopped: false, steps: 0, rejected: 0 };
    if t_out.is_empty() {
        return Ok(run);
    }
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k1 = vec![0.0; n];
    let (mut k2, mut k3, mut k4, mut k5, mut k6, mut k7) =
        (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    f(t, &y, &mut k1)?;
    let span = t_out[t_out.len() - 1] - t0;
    let mut h = if opts.h_init > 0.0 { opts.h_init } else { initial_step(&y, &k1, opts, span) };
    h = h.min(opts.h_max);
    let h_min = opts.h_min * span.max(1.0);
    let mut target = 0usize;
    while target < t_out.len() {
        if run.steps + run.rejected >= opts.max_steps {
            return Err(Error::NotConverged(format!("ODE step budget exhausted at t = {t}")));
        }
        let t_next = t_out[target];
        let mut lands = false;
        let mut step = h;
        if t + step >= t_next - 1e-14 * t_next.abs().max(1.0) {
            step = t_next - t;
            lands = true;
        }
        lin(&y, step, &[(A21, &k1)], &mut tmp);
        f(t + C2 * step, &tmp, &mut k2)?;
        lin(&y, step, &[(A31, &k1), (A32, &k2)], &mut tmp);
        f(t + C3 * step, &tmp, &mut k3)?;
        lin(&y, step, &[(A41, &k1), (A42, &k2), (A43, &k3)], &mut tmp);
        f(t + C4 * step, &tmp, &mut k4)?;
        lin(&y, step, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], &mut tmp);
        f(t + C5 * step, &tmp, &mut k5)?;
        lin(&y, step, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)], &mut tmp);
        f(t + step, &tmp, &mut k6)?;
        lin(&y, step, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)], &mut y_new);
        f(t + step, &y_new, &mut k7)?;
        let mut err = 0.0f64;
        for i in 0..n {
            let e = step * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
            err = err.max((e / sc).abs());
        }
        if !err.is_finite() || y_new.iter().chain(&k7).any(|v| !v.is_finite()) {
            err = f64::INFINITY;
        }
        if err <= 1.0 {
            t = if lands { t_next } else { t + step };
            std::mem::swap(&mut y, &mut y_new);
            std::mem::swap(&mut k1, &mut k7);
            run.steps += 1;
            let ctl = observe(t, &y)?;
            if lands {
                run.samples.push((t, y.clone()));
                target += 1;
            }
            if ctl == Control::Stop {
                if !lands {
                    run.samples.push((t, y.clone()));
                }
                run.stopped = target < t_out.len();
                return Ok(run);
            }
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if !lands || fac < 1.0 {
                h = (step * fac).min(opts.h_max);
            }
        } else {
            run.rejected += 1;
            let fac = if err.is_finite() { (0.9 * err.powf(-0.2)).clamp(0.1, 0.9) } else { 0.1 };
            h = step * fac;
            if h < h_min {
                return Err(Error::StepSizeUnderflow(t));
            }
        }
    }
    Ok(run)
}

fn initial_step(y: &[f64], dy: &[f64], opts: &OdeOptions, span: f64) -> f64 {
    let mut d0 = 0.0f64;
    let mut d1 = 0.0f64;
    for i in 0..y.len() {
        let sc = opts.atol + opts.rtol * y[i].abs();
        d0 = d0.max((y[i] / sc).abs());
        d1 = d1.max((dy[i] / sc).abs());
    }
    let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h.min(span * 0.1).max(1e-12 * span.max(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cont(_: f64, _: &[f64]) -> Result<Control> {
        Ok(Control::Continue)
    }

    #[test]
    fn exponential_decay() {
        let opts = OdeOptions { rtol: 1e-11, atol: 1e-14, ..Default::default() };
        let run = solve(
            |_, y, d| {
                d[0] = -y[0];
                Ok(())
            },
            0.0,
            &[1.0],
            &[0.5, 1.0, 3.0],
            &opts,
            cont,
        )
        .unwrap();
        assert_eq!(run.samples.len(), 4);
        for (t, y) in &run.samples {
            assert!((y[0] - (-t).exp()).abs() < 1e-10, "t={t}");
        }
        assert_eq!(run.samples[3].0, 3.0);
    }

    #[test]
    fn harmonic_oscillator_period() {
        let run = solve(
            |_, y, d| {
                d[0] = y[1];
                d[1] = -y[0];
                Ok(())
            },
            0.0,
            &[1.0, 0.0],
            &[2.0 * std::f64::consts::PI],
            &OdeOptions::default(),
            cont,
        )
        .unwrap();
        let y = &run.samples[1].1;
        assert!((y[0] - 1.0).abs() < 1e-7 && y[1].abs() < 1e-7);
    }

    #[test]
    fn fifth_order_polynomial_exact() {
        let run = solve(
            |t, _, d| {
                d[0] = 5.0 * t.powi(4);
                Ok(())
            },
            0.0,
            &[0.0],
            &[2.0],
            &OdeOptions::default(),
            cont,
        )
        .unwrap();
        assert!((run.samples[1].1[0] - 32.0).abs() < 1e-9);
    }

    #[test]
    fn observer_stops() {
        let run = solve(
            |_, _, d| {
                d[0] = 1.0;
                Ok(())
            },
            0.0,
            &[0.0],
            &[10.0],
            &OdeOptions::default(),
            |_, y| Ok(if y[0] > 1.0 { Control::Stop } else { Control::Continue }),
        )
        .unwrap();
        assert!(run.stopped);
        let last = run.samples.last().unwrap();
        assert!(last.1[0] > 1.0 && last.0 < 10.0);
    }

    #[test]
    fn blow_up_underflows() {
        let r = solve(
            |_, y, d| {
                d[0] = y[0] * y[0];
                Ok(())
            },
            0.0,
            &[1.0],
            &[2.0],
            &OdeOptions::default(),
            cont,
        );
        assert!(matches!(r, Err(Error::StepSizeUnderflow(_)) | Err(Error::NotConverged(_))), "{r:?}");
    }

    #[test]
    fn bad_output_grid() {
        let f = |_: f64, _: &[f64], d: &mut [f64]| {
            d[0] = 0.0;
            Ok(())
        };
        assert!(solve(f, 0.0, &[0.0], &[1.0, 0.5], &OdeOptions::default(), cont).is_err());
        assert!(solve(f, 1.0, &[0.0], &[1.0], &OdeOptions::default(), cont).is_err());
    }
}
