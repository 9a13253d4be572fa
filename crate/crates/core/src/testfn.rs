//! Smooth compactly supported space-time test functions with analytic
//! derivatives.

use serde::{Deserialize, Serialize};

/// Standard bump normalized to 1 at the origin: `exp(1 - 1/(1 - s^2))` on
/// `|s| < 1`, zero elsewhere. Returns the value and its derivative.
pub fn bump(s: f64) -> (f64, f64) {
    if s.abs() >= 1.0 {
        return (0.0, 0.0);
    }
    let q = 1.0 - s * s;
    let v = (1.0 - 1.0 / q).exp();
    (v, v * (-2.0 * s / (q * q)))
}

/// One factor `(1 + a s + b s^2) * bump(s)` with `s = (y - center) / half`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpFactor {
    pub center: f64,
    pub half: f64,
    pub linear: f64,
    pub quadratic: f64,
}

impl BumpFactor {
    pub fn plain(center: f64, half: f64) -> Self {
        BumpFactor { center, half, linear: 0.0, quadratic: 0.0 }
    }

    /// Value and derivative with respect to `y`.
    pub fn eval(&self, y: f64) -> (f64, f64) {
        let s = (y - self.center) / self.half;
        let (b, db) = bump(s);
        if b == 0.0 {
            return (0.0, 0.0);
        }
        let p = 1.0 + self.linear * s + self.quadratic * s * s;
        let dp = self.linear + 2.0 * self.quadratic * s;
        (p * b, (dp * b + p * db) / self.half)
    }

    pub fn lo(&self) -> f64 {
        self.center - self.half
    }

    pub fn hi(&self) -> f64 {
        self.center + self.half
    }

    /// True when the polynomial prefactor cannot change sign on the support.
    pub fn is_nonnegative(&self) -> bool {
        let p = |s: f64| 1.0 + self.linear * s + self.quadratic * s * s;
        let mut ok = p(-1.0) >= 0.0 && p(1.0) >= 0.0;
        if self.quadratic != 0.0 {
            let s = -self.linear / (2.0 * self.quadratic);
            if s.abs() < 1.0 {
                ok &= p(s) >= 0.0;
            }
        }
        ok
    }
}

/// Tensor-product test function `amplitude * prod_k f_k(x_k) * g(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub space: Vec<BumpFactor>,
    pub time: BumpFactor,
    pub amplitude: f64,
}

impl TestFunction {
    pub fn dim(&self) -> usize {
        self.space.len()
    }

    pub fn value(&self, x: &[f64], t: f64) -> f64 {
        let (g, _) = self.time.eval(t);
        if g == 0.0 {
            return 0.0;
        }
        let mut v = self.amplitude * g;
        for (f, &xk) in self.space.iter().zip(x) {
            v *= f.eval(xk).0;
            if v == 0.0 {
                break;
            }
        }
        v
    }

    /// Value, spatial gradient and time derivative.
    pub fn eval_all(&self, x: &[f64], t: f64) -> (f64, Vec<f64>, f64) {
        let n = self.space.len();
        let (g, dg) = self.time.eval(t);
        let parts: Vec<(f64, f64)> = self.space.iter().zip(x).map(|(f, &xk)| f.eval(xk)).collect();
        let prod: f64 = parts.iter().map(|p| p.0).product();
        let value = self.amplitude * prod * g;
        let dt = self.amplitude * prod * dg;
        let mut grad = vec![0.0; n];
        for k in 0..n {
            let mut p = self.amplitude * g * parts[k].1;
            for (j, part) in parts.iter().enumerate() {
                if j != k {
                    p *= part.0;
                }
            }
            grad[k] = p;
        }
        (value, grad, dt)
    }

    /// Spatial support box `[lo_k, hi_k]`.
    pub fn space_box(&self) -> Vec<(f64, f64)> {
        self.space.iter().map(|f| (f.lo(), f.hi())).collect()
    }

    /// Time support clipped to `t >= 0`.
    pub fn time_range(&self) -> (f64, f64) {
        (self.time.lo().max(0.0), self.time.hi())
    }

    pub fn is_nonnegative(&self) -> bool {
        self.amplitude >= 0.0 && self.time.is_nonnegative() && self.space.iter().all(BumpFactor::is_nonnegative)
    }

    /// Whether the function is nonzero at `t = 0` somewhere.
    pub fn touches_initial_time(&self) -> bool {
        self.time.lo() < 0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_is_smooth_and_normalized() {
        assert_eq!(bump(0.0), (1.0, 0.0));
        assert_eq!(bump(1.0), (0.0, 0.0));
        assert_eq!(bump(-1.5), (0.0, 0.0));
        let h = 1e-6;
        for s in [-0.9, -0.3, 0.2, 0.75] {
            let fd = (bump(s + h).0 - bump(s - h).0) / (2.0 * h);
            assert!((bump(s).1 - fd).abs() < 1e-7);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let f = TestFunction {
            space: vec![
                BumpFactor { center: 0.1, half: 0.8, linear: 0.5, quadratic: -0.3 },
                BumpFactor { center: -0.2, half: 0.6, linear: -1.5, quadratic: 0.0 },
            ],
            time: BumpFactor { center: 0.5, half: 0.4, linear: 0.2, quadratic: 0.1 },
            amplitude: 1.7,
        };
        let x = [0.3, -0.1];
        let t = 0.6;
        let (v, g, dt) = f.eval_all(&x, t);
        assert!((v - f.value(&x, t)).abs() < 1e-15);
        let h = 1e-6;
        for k in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[k] += h;
            xm[k] -= h;
            let fd = (f.value(&xp, t) - f.value(&xm, t)) / (2.0 * h);
            assert!((g[k] - fd).abs() < 1e-7);
        }
        let fd = (f.value(&x, t + h) - f.value(&x, t - h)) / (2.0 * h);
        assert!((dt - fd).abs() < 1e-7);
        assert!(!f.is_nonnegative());
    }
}
