//! One-dimensional Gauss-Legendre rules and composite panel integration.

use std::f64::consts::PI;

/// Gauss-Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes from Newton iteration on P_n, seeded with the Chebyshev-like
    /// asymptotic guess. Accurate to a few ulp for n up to a few hundred.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    /// Integrate `f` over `[a, b]` with this rule.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes.iter().zip(&self.weights).map(move |(x, w)| (mid + half * x, w * half))
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite rule: `panels` equal Gauss panels on each sub-interval between
/// consecutive breakpoints. Breakpoints outside `[a, b]` are ignored.
#[derive(Debug, Clone)]
pub struct Composite {
    pub rule: GaussLegendre,
    pub panels: usize,
}

impl Composite {
    pub fn new(points: usize, panels: usize) -> Self {
        Composite { rule: GaussLegendre::new(points), panels: panels.max(1) }
    }

    /// Quadrature nodes `(x, w)` for `[a, b]` split at `breaks`.
    pub fn nodes(&self, a: f64, b: f64, breaks: &[f64]) -> Vec<(f64, f64)> {
        let mut cuts: Vec<f64> = Vec::with_capacity(breaks.len() + 2);
        cuts.push(a);
        for &c in breaks {
            if c > a && c < b {
                cuts.push(c);
            }
        }
        cuts.push(b);
        cuts.sort_by(|x, y| x.total_cmp(y));
        cuts.dedup();
        let mut out = Vec::with_capacity((cuts.len() - 1) * self.panels * self.rule.nodes.len());
        for w in cuts.windows(2) {
            let h = (w[1] - w[0]) / self.panels as f64;
            if h <= 0.0 {
                continue;
            }
            for k in 0..self.panels {
                let lo = w[0] + k as f64 * h;
                out.extend(self.rule.mapped(lo, lo + h));
            }
        }
        out
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, breaks: &[f64], mut f: F) -> f64 {
        self.nodes(a, b, breaks).into_iter().map(|(x, w)| w * f(x)).sum()
    }
}
