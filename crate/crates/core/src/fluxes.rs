//! Generalized flux pair `(F, N)` for the system
//! `rho_t + div(rho F(U)) = 0`, `(rho U)_t + div(rho N(U)) = 0`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::vecops::dot;

/// Monotone piecewise-cubic Hermite interpolant (Fritsch-Carlson slopes).
/// Outside the table the end tangents are used for linear extrapolation so
/// evaluation stays total over finite inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(Error::InvalidParameter("flux table needs at least two (u, value) pairs of equal length".into()));
        }
        ensure_finite("flux table", &xs)?;
        ensure_finite("flux table", &ys)?;
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("flux table abscissae must be strictly increasing".into()));
        }
        let n = xs.len();
        let secants: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i])).collect();
        let mut slopes = vec![0.0; n];
        slopes[0] = secants[0];
        slopes[n - 1] = secants[n - 2];
        for i in 1..n - 1 {
            slopes[i] = if secants[i - 1] * secants[i] <= 0.0 { 0.0 } else { 0.5 * (secants[i - 1] + secants[i]) };
        }
        for i in 0..n - 1 {
            let d = secants[i];
            if d == 0.0 {
                slopes[i] = 0.0;
                slopes[i + 1] = 0.0;
                continue;
            }
            let a = slopes[i] / d;
            let b = slopes[i + 1] / d;
            let s = a * a + b * b;
            if s > 9.0 {
                let tau = 3.0 / s.sqrt();
                slopes[i] = tau * a * d;
                slopes[i + 1] = tau * b * d;
            }
        }
        Ok(MonotoneCubic { xs, ys, slopes })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0] + self.slopes[0] * (x - self.xs[0]);
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1] + self.slopes[n - 1] * (x - self.xs[n - 1]);
        }
        let i = match self.xs.binary_search_by(|p| p.total_cmp(&x)) {
            Ok(i) => return self.ys[i],
            Err(i) => i - 1,
        };
        let h = self.xs[i + 1] - self.xs[i];
        let s = (x - self.xs[i]) / h;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        h00 * self.ys[i] + h10 * h * self.slopes[i] + h01 * self.ys[i + 1] + h11 * h * self.slopes[i + 1]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FluxKind {
    /// `F(U) = U`, `N(U) = U (x) U`.
    Standard,
    /// `F(U) = C(U)`, `N(U) = U (x) C(U)` with `C(U) = c0 U / sqrt(c0^2 + |U|^2)`.
    Relativistic { c0: f64 },
    /// One-dimensional user tables for `F(u)` and `N(u)`.
    Tabulated { f: MonotoneCubic, n: MonotoneCubic },
}

/// An immutable flux model; cheap to clone and safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxModel {
    name: String,
    dim: usize,
    kind: FluxKind,
    params: BTreeMap<String, f64>,
}

pub fn standard_flux(dim: usize) -> Result<FluxModel> {
    FluxModel::standard(dim)
}

pub fn relativistic_flux(dim: usize, c0: f64) -> Result<FluxModel> {
    FluxModel::relativistic(dim, c0)
}

impl FluxModel {
    pub fn standard(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(FluxModel { name: "standard".into(), dim, kind: FluxKind::Standard, params: BTreeMap::new() })
    }

    pub fn relativistic(dim: usize, c0: f64) -> Result<Self> {
        check_dim(dim)?;
        if !(c0.is_finite() && c0 > 0.0) {
            return Err(Error::InvalidParameter(format!("c0 must be positive, got {c0}")));
        }
        let mut params = BTreeMap::new();
        params.insert("c0".to_string(), c0);
        Ok(FluxModel { name: "relativistic".into(), dim, kind: FluxKind::Relativistic { c0 }, params })
    }

    /// A one-dimensional model from tabulated `F(u)` and `N(u)` samples.
    pub fn tabulated(name: &str, u: &[f64], f: &[f64], n: &[f64]) -> Result<Self> {
        let f = MonotoneCubic::new(u.to_vec(), f.to_vec())?;
        let n = MonotoneCubic::new(u.to_vec(), n.to_vec())?;
        Ok(FluxModel { name: name.to_string(), dim: 1, kind: FluxKind::Tabulated { f, n }, params: BTreeMap::new() })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &FluxKind {
        &self.kind
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn is_standard(&self) -> bool {
        matches!(self.kind, FluxKind::Standard)
    }

    /// Same model family in another dimension (tables stay 1-D only).
    pub fn with_dim(&self, dim: usize) -> Result<Self> {
        match &self.kind {
            FluxKind::Standard => FluxModel::standard(dim),
            FluxKind::Relativistic { c0 } => FluxModel::relativistic(dim, *c0),
            FluxKind::Tabulated { .. } if dim == 1 => Ok(self.clone()),
            FluxKind::Tabulated { .. } => Err(Error::InvalidDimension("tabulated flux models are one-dimensional".into())),
        }
    }

    fn check(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: u.len() });
        }
        ensure_finite("velocity", u)
    }

    /// Vector flux `F(U)`.
    pub fn flux(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check(u)?;
        Ok(self.flux_unchecked(u))
    }

    pub(crate) fn flux_unchecked(&self, u: &[f64]) -> Vec<f64> {
        match &self.kind {
            FluxKind::Standard => u.to_vec(),
            FluxKind::Relativistic { c0 } => {
                // scaled to avoid overflow of |U|^2 for huge velocities
                let m = u.iter().fold(*c0, |m, v| m.max(v.abs()));
                let q = (c0 / m).powi(2) + u.iter().map(|v| (v / m).powi(2)).sum::<f64>();
                let s = (c0 / m) / q.sqrt();
                u.iter().map(|v| v * s).collect()
            }
            FluxKind::Tabulated { f, .. } => vec![f.eval(u[0])],
        }
    }

    /// Momentum flux tensor `N(U)`, row-major: entry `[k * n + j]` is `N_kj`.
    pub fn tensor(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check(u)?;
        let n = self.dim;
        Ok(match &self.kind {
            FluxKind::Tabulated { n: table, .. } => vec![table.eval(u[0])],
            _ => {
                let c = self.flux_unchecked(u);
                let mut out = vec![0.0; n * n];
                for k in 0..n {
                    for j in 0..n {
                        out[k * n + j] = u[k] * c[j];
                    }
                }
                out
            }
        })
    }

    /// Contraction `N(U) . nu`, i.e. the vector `sum_j N_kj nu_j`.
    pub fn tensor_dot(&self, u: &[f64], nu: &[f64]) -> Result<Vec<f64>> {
        let t = self.tensor(u)?;
        if nu.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: nu.len() });
        }
        let n = self.dim;
        Ok((0..n).map(|k| dot(&t[k * n..(k + 1) * n], nu)).collect())
    }

    /// Normal flux `F(U) . nu`.
    pub fn flux_dot(&self, u: &[f64], nu: &[f64]) -> Result<f64> {
        Ok(dot(&self.flux(u)?, nu))
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        Err(Error::InvalidDimension("flux dimension must be at least 1".into()))
    } else {
        Ok(())
    }
}

/// Flux reference as it appears in scenario files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum FluxSpec {
    Standard {},
    Relativistic { c0: f64 },
}

impl Default for FluxSpec {
    fn default() -> Self {
        FluxSpec::Standard {}
    }
}

impl FluxSpec {
    pub fn build(&self, dim: usize) -> Result<FluxModel> {
        match self {
            FluxSpec::Standard {} => FluxModel::standard(dim),
            FluxSpec::Relativistic { c0 } => FluxModel::relativistic(dim, *c0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn standard_examples() {
        let f = standard_flux(1).unwrap();
        assert_eq!(f.flux(&[2.0]).unwrap(), vec![2.0]);
        assert_eq!(f.tensor(&[2.0]).unwrap(), vec![4.0]);
        let f2 = standard_flux(2).unwrap();
        assert_eq!(f2.tensor(&[1.0, -1.0]).unwrap(), vec![1.0, -1.0, -1.0, 1.0]);
        let f3 = standard_flux(3).unwrap();
        assert_eq!(f3.flux(&[0.0; 3]).unwrap(), vec![0.0; 3]);
        assert!(f3.tensor(&[0.0; 3]).unwrap().iter().all(|v| *v == 0.0));
        assert!(matches!(standard_flux(0), Err(Error::InvalidDimension(_))));
    }

    #[test]
    fn relativistic_examples() {
        let f = relativistic_flux(1, 1.0).unwrap();
        assert_eq!(f.flux(&[0.0]).unwrap(), vec![0.0]);
        assert!((f.flux(&[1.0]).unwrap()[0] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        let big = f.flux(&[1e300]).unwrap()[0];
        assert!(big <= 1.0 && big > 0.999);
        assert!(matches!(relativistic_flux(1, 0.0), Err(Error::InvalidParameter(_))));
        assert!(matches!(relativistic_flux(1, -2.0), Err(Error::InvalidParameter(_))));
        assert_eq!(f.params().get("c0"), Some(&1.0));
    }

    #[test]
    fn nan_is_rejected() {
        let f = standard_flux(2).unwrap();
        assert!(matches!(f.flux(&[f64::NAN, 0.0]), Err(Error::NonFinite(_))));
        assert!(matches!(f.flux(&[0.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn relativistic_converges_to_standard() {
        let u = [1.5, -0.7, 0.3];
        let un = crate::vecops::norm(&u);
        for c0 in [10.0, 100.0, 1000.0] {
            let c = relativistic_flux(3, c0).unwrap().flux(&u).unwrap();
            let err = crate::vecops::norm(&crate::vecops::sub(&c, &u));
            let bound = un.powi(3) / (2.0 * c0 * c0);
            assert!(err <= bound * (1.0 + 1e-6), "c0={c0} err={err} bound={bound}");
        }
    }

    #[test]
    fn monotone_table_reproduces_linear_data() {
        let t = MonotoneCubic::new(vec![-1.0, 0.0, 2.0], vec![-1.0, 0.0, 2.0]).unwrap();
        for x in [-3.0, -0.5, 0.0, 1.3, 2.0, 5.0] {
            assert!((t.eval(x) - x).abs() < 1e-14);
        }
        let t = MonotoneCubic::new(vec![0.0, 1.0, 2.0, 3.0], vec![0.0, 0.0, 1.0, 1.0]).unwrap();
        let mut prev = -1.0;
        for k in 0..=300 {
            let v = t.eval(k as f64 / 100.0);
            assert!(v >= prev - 1e-15);
            prev = v;
        }
    }

    #[test]
    fn tabulated_standard_matches_builtin() {
        let us: Vec<f64> = (-20..=20).map(|k| k as f64 * 0.25).collect();
        let fs = us.clone();
        let ns: Vec<f64> = us.iter().map(|u| u * u).collect();
        let tab = FluxModel::tabulated("table", &us, &fs, &ns).unwrap();
        assert_eq!(tab.dim(), 1);
        assert!((tab.flux(&[0.8]).unwrap()[0] - 0.8).abs() < 1e-14);
        assert!((tab.tensor(&[0.8]).unwrap()[0] - 0.64).abs() < 1e-3);
    }

    #[test]
    fn flux_spec_parses() {
        let s: FluxSpec = serde_json::from_str(r#"{"kind":"relativistic","c0":3.0}"#).unwrap();
        assert_eq!(s, FluxSpec::Relativistic { c0: 3.0 });
        let s: FluxSpec = serde_json::from_str(r#"{"kind":"standard"}"#).unwrap();
        assert_eq!(s, FluxSpec::Standard {});
        assert!(serde_json::from_str::<FluxSpec>(r#"{"kind":"standard","x":1}"#).is_err());
    }

    proptest! {
        #[test]
        fn tensor_is_rank_one(u in prop::collection::vec(-50.0f64..50.0, 3),
                              a in -3.0f64..3.0, b in -3.0f64..3.0, c0 in 0.5f64..20.0) {
            let len = (a * a + b * b + 1.0).sqrt();
            let nu = [a / len, b / len, 1.0 / len];
            for model in [standard_flux(3).unwrap(), relativistic_flux(3, c0).unwrap()] {
                let nd = model.tensor_dot(&u, &nu).unwrap();
                let fnu = model.flux_dot(&u, &nu).unwrap();
                // the dot product may cancel, so scale by its absolute terms
                let f = model.flux(&u).unwrap();
                let mag: f64 = f.iter().zip(&nu).map(|(x, y)| (x * y).abs()).sum();
                for k in 0..3 {
                    prop_assert!((nd[k] - u[k] * fnu).abs() <= 1e-14 * (1.0 + u[k].abs() * mag));
                }
            }
        }

        #[test]
        fn relativistic_speed_below_c0(u in prop::collection::vec(-1e6f64..1e6, 2), c0 in 0.1f64..10.0) {
            let f = relativistic_flux(2, c0).unwrap().flux(&u).unwrap();
            // strict in exact arithmetic; rounds to c0 once |U| >> c0
            prop_assert!(crate::vecops::norm(&f) <= c0);
        }
    }
}
