//! Chart-based quadrature on front patches.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quadrature::{Composite, GaussLegendre};
use crate::vecops::{norm, tangent_basis};

pub type HeightFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum Chart {
    /// Full sphere `|x - center| = radius` (n = 1, 2, 3).
    Sphere { center: Vec<f64>, radius: f64 },
    /// Plane `nu . x = offset`; `window` bounds the tangential coordinates
    /// along the orthonormal completion of `nu`.
    Plane { normal: Vec<f64>, offset: f64, window: Vec<(f64, f64)> },
    /// Graph `x_n = h(x_1..x_{n-1})` over a rectangular window.
    Graph { height: HeightFn, window: Vec<(f64, f64)> },
}

impl fmt::Debug for Chart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Chart::Sphere { center, radius } => write!(f, "Sphere({center:?}, {radius})"),
            Chart::Plane { normal, offset, window } => {
                write!(f, "Plane({normal:?}, {offset}, {window:?})")
            }
            Chart::Graph { window, .. } => write!(f, "Graph({window:?})"),
        }
    }
}

/// Nodes on the front with positive weights summing to the patch measure.
#[derive(Debug, Clone)]
pub struct SurfacePatchQuadrature {
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub chart: Chart,
}

impl SurfacePatchQuadrature {
    /// Build a rule with `order` Gauss points per panel (and `panels` panels
    /// per tangential direction on planes and graphs).
    ///
    /// Spheres use Gauss-Legendre in `cos(theta)` times the trapezoid rule
    /// in azimuth (exact for polynomials of degree `2 order - 1`); circles use
    /// the trapezoid rule with `2 order` points, which is spectrally accurate
    /// for periodic integrands.
    pub fn new(chart: Chart, order: usize, panels: usize) -> Result<Self> {
        let order = order.max(1);
        let (nodes, weights) = match &chart {
            Chart::Sphere { center, radius } => sphere_nodes(center, *radius, order)?,
            Chart::Plane { normal, offset, window } => plane_nodes(normal, *offset, window, order, panels)?,
            Chart::Graph { height, window } => graph_nodes(height, window, order, panels)?,
        };
        Ok(SurfacePatchQuadrature { nodes, weights, chart })
    }

    pub fn sphere(center: &[f64], radius: f64, order: usize) -> Result<Self> {
        Self::new(Chart::Sphere { center: center.to_vec(), radius }, order, 1)
    }

    pub fn plane(normal: &[f64], offset: f64, window: Vec<(f64, f64)>, order: usize, panels: usize) -> Result<Self> {
        Self::new(Chart::Plane { normal: normal.to_vec(), offset, window }, order, panels)
    }

    pub fn measure(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// `sum_i w_i f(x_i)`.
pub fn surface_integral<F: Fn(&[f64]) -> f64>(f: F, quad: &SurfacePatchQuadrature) -> Result<f64> {
    if quad.is_empty() {
        return Err(Error::EmptyQuadrature);
    }
    Ok(quad.nodes.iter().zip(&quad.weights).map(|(x, w)| w * f(x)).sum())
}

type Nodes = (Vec<Vec<f64>>, Vec<f64>);

fn sphere_nodes(center: &[f64], radius: f64, order: usize) -> Result<Nodes> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::InvalidParameter(format!("sphere radius {radius}")));
    }
    let c = center;
    match c.len() {
        1 => Ok((vec![vec![c[0] - radius], vec![c[0] + radius]], vec![1.0, 1.0])),
        2 => {
            let m = 2 * order;
            let w = 2.0 * PI * radius / m as f64;
            let nodes = (0..m)
                .map(|k| {
                    let a = 2.0 * PI * (k as f64 + 0.5) / m as f64;
                    vec![c[0] + radius * a.cos(), c[1] + radius * a.sin()]
                })
                .collect();
            Ok((nodes, vec![w; m]))
        }
        3 => {
            let gl = GaussLegendre::new(order);
            let m = 2 * order;
            let mut nodes = Vec::with_capacity(order * m);
            let mut weights = Vec::with_capacity(order * m);
            for (z, wz) in gl.nodes.iter().zip(&gl.weights) {
                let s = (1.0 - z * z).sqrt();
                for k in 0..m {
                    let a = 2.0 * PI * (k as f64 + 0.5) / m as f64;
                    nodes.push(vec![c[0] + radius * s * a.cos(), c[1] + radius * s * a.sin(), c[2] + radius * z]);
                    weights.push(wz * 2.0 * PI / m as f64 * radius * radius);
                }
            }
            Ok((nodes, weights))
        }
        n => Err(Error::UnsupportedFront(format!("sphere charts are available for n <= 3, got n = {n}"))),
    }
}

/// Tensor Gauss panels over a rectangular window of dimension `window.len()`.
pub(crate) fn box_nodes(window: &[(f64, f64)], order: usize, panels: usize) -> Nodes {
    let rule = Composite::new(order, panels);
    let axes: Vec<Vec<(f64, f64)>> = window.iter().map(|&(a, b)| rule.nodes(a, b, &[])).collect();
    let mut nodes = vec![Vec::new()];
    let mut weights = vec![1.0];
    for axis in &axes {
        let mut nn = Vec::with_capacity(nodes.len() * axis.len());
        let mut ww = Vec::with_capacity(nodes.len() * axis.len());
        for (p, w) in nodes.iter().zip(&weights) {
            for &(y, wy) in axis {
                let mut q = p.clone();
                q.push(y);
                nn.push(q);
                ww.push(w * wy);
            }
        }
        nodes = nn;
        weights = ww;
    }
    (nodes, weights)
}

fn plane_nodes(normal: &[f64], offset: f64, window: &[(f64, f64)], order: usize, panels: usize) -> Result<Nodes> {
    let n = normal.len();
    if n == 0 {
        return Err(Error::InvalidDimension("plane normal is empty".into()));
    }
    if window.len() + 1 != n {
        return Err(Error::DimensionMismatch { expected: n - 1, got: window.len() });
    }
    let len = norm(normal);
    if len == 0.0 {
        return Err(Error::DegenerateGradient(0.0));
    }
    let nu: Vec<f64> = normal.iter().map(|v| v / len).collect();
    let tb = tangent_basis(&nu);
    let (coords, weights) = box_nodes(window, order, panels);
    let nodes = coords
        .iter()
        .map(|y| {
            let mut x: Vec<f64> = nu.iter().map(|v| v * offset).collect();
            for (yk, tk) in y.iter().zip(&tb) {
                for (xi, ti) in x.iter_mut().zip(tk) {
                    *xi += yk * ti;
                }
            }
            x
        })
        .collect();
    Ok((nodes, weights))
}

fn graph_nodes(height: &HeightFn, window: &[(f64, f64)], order: usize, panels: usize) -> Result<Nodes> {
    if window.is_empty() {
        return Err(Error::InvalidDimension("graph charts need n >= 2".into()));
    }
    let (coords, base) = box_nodes(window, order, panels);
    let scale = window.iter().map(|(a, b)| (b - a).abs()).fold(0.0, f64::max).max(1e-300);
    let h = 1e-6 * scale;
    let mut nodes = Vec::with_capacity(coords.len());
    let mut weights = Vec::with_capacity(coords.len());
    for (y, w) in coords.iter().zip(&base) {
        let mut g2 = 0.0;
        let mut z = y.clone();
        for k in 0..y.len() {
            let z0 = z[k];
            z[k] = z0 + h;
            let hp = height(&z);
            z[k] = z0 - h;
            let hm = height(&z);
            z[k] = z0;
            let d = (hp - hm) / (2.0 * h);
            g2 += d * d;
        }
        let mut x = y.clone();
        x.push(height(y));
        nodes.push(x);
        weights.push(w * (1.0 + g2).sqrt());
    }
    Ok((nodes, weights))
}
