//! Charted Riemannian metrics for the model spaces, together with their
//! Christoffel symbols and curvature tensors.
//!
//! Curvature sign convention: `R_{abcd} = <R(∂_c, ∂_d) ∂_b, ∂_a>` with
//! `R(X, Y) = ∇_X ∇_Y - ∇_Y ∇_X - ∇_[X,Y]`, so that the sectional curvature
//! `K = R_{1212} / (g_11 g_22 - g_12²)` equals `+1` on the unit sphere.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};

/// Relative symmetry residual above which finite-difference curvature is rejected.
pub const FD_SYMMETRY_GATE: f64 = 1e-5;

/// A coordinate chart carrying one of the supported model metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartedMetric {
    dim: usize,
    kind: MetricKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MetricKind {
    /// Cartesian chart on flat `R^n`.
    Euclidean,
    /// Hyperspherical chart `(θ_1, …, θ_{n-1}, φ)` on the round sphere of the
    /// given radius. The domain is `θ_i ∈ (0, π)`, `φ ∈ (-π, π)`.
    SpherePolar { radius: f64 },
    /// Poincaré ball of constant curvature `curvature < 0`; the chart is the
    /// open ball of Euclidean radius `1/sqrt(-curvature)`.
    HyperbolicBall { curvature: f64 },
    /// Riemannian product; coordinates are the left factor's followed by the right's.
    Product(Box<ChartedMetric>, Box<ChartedMetric>),
}

/// Metric components and their first and second coordinate derivatives at a point.
///
/// `dg[(k * n + i) * n + j] = ∂_k g_ij`, `ddg[((k * n + l) * n + i) * n + j] = ∂_k ∂_l g_ij`.
#[derive(Debug, Clone)]
pub struct MetricJet {
    pub g: DMatrix<f64>,
    pub dg: Vec<f64>,
    pub ddg: Vec<f64>,
}

impl MetricJet {
    pub fn zeros(n: usize) -> Self {
        Self { g: DMatrix::zeros(n, n), dg: vec![0.0; n * n * n], ddg: vec![0.0; n * n * n * n] }
    }

    fn dim(&self) -> usize {
        self.g.nrows()
    }

    #[inline]
    fn d(&self, k: usize, i: usize, j: usize) -> f64 {
        let n = self.dim();
        self.dg[(k * n + i) * n + j]
    }

    #[inline]
    fn dd(&self, k: usize, l: usize, i: usize, j: usize) -> f64 {
        let n = self.dim();
        self.ddg[((k * n + l) * n + i) * n + j]
    }
}

/// Anything that can supply a metric on an open coordinate domain.
///
/// Implementors without closed-form derivatives get central finite
/// differences for free.
pub trait MetricField: Sync {
    fn dim(&self) -> usize;
    fn contains(&self, x: &[f64]) -> bool;
    /// Metric matrix at `x`; callers have already checked `contains(x)`.
    fn metric_matrix(&self, x: &[f64]) -> DMatrix<f64>;
    fn analytic_jet(&self, _x: &[f64]) -> Option<MetricJet> {
        None
    }
}

/// How metric derivatives are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Differentiation {
    /// Closed-form derivatives when the chart provides them, finite differences otherwise.
    #[default]
    Auto,
    FiniteDifference,
}

/// Text form: `euclidean:N`, `sphere:N[:RADIUS]`, `hyperbolic:N[:CURVATURE]`,
/// products joined with `*` (left to right).
impl std::str::FromStr for ChartedMetric {
    type Err = GeomError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: &str| GeomError::InvalidInput(format!("model {s:?}: {msg}"));
        let mut out: Option<ChartedMetric> = None;
        for part in s.split('*') {
            let fields: Vec<&str> = part.trim().split(':').map(str::trim).collect();
            let dim: usize = fields
                .get(1)
                .ok_or_else(|| bad("missing dimension"))?
                .parse()
                .map_err(|_| bad("dimension must be a positive integer"))?;
            if dim == 0 {
                return Err(bad("dimension must be a positive integer"));
            }
            let param = |default: f64| -> Result<f64> {
                match fields.get(2) {
                    None => Ok(default),
                    Some(t) => t.parse::<f64>().map_err(|_| bad("bad numeric parameter")),
                }
            };
            if fields.len() > 3 {
                return Err(bad("too many fields"));
            }
            let m = match fields[0] {
                "euclidean" | "flat" => {
                    if fields.len() > 2 {
                        return Err(bad("flat charts take no parameter"));
                    }
                    ChartedMetric::euclidean(dim)
                }
                "sphere" => {
                    let r = param(1.0)?;
                    if !(r > 0.0 && r.is_finite()) {
                        return Err(bad("radius must be positive"));
                    }
                    ChartedMetric::sphere(dim, r)
                }
                "hyperbolic" => {
                    let k = param(-1.0)?;
                    if !(k < 0.0 && k.is_finite()) {
                        return Err(bad("curvature must be negative"));
                    }
                    ChartedMetric::hyperbolic(dim, k)
                }
                other => return Err(bad(&format!("unknown model kind {other:?}"))),
            };
            out = Some(match out {
                None => m,
                Some(prev) => ChartedMetric::product(prev, m),
            });
        }
        out.ok_or_else(|| bad("empty"))
    }
}

impl std::fmt::Display for ChartedMetric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.kind {
            MetricKind::Euclidean => write!(f, "euclidean:{}", self.dim),
            MetricKind::SpherePolar { radius } => write!(f, "sphere:{}:{}", self.dim, radius),
            MetricKind::HyperbolicBall { curvature } => write!(f, "hyperbolic:{}:{}", self.dim, curvature),
            MetricKind::Product(a, b) => write!(f, "{a}*{b}"),
        }
    }
}

impl ChartedMetric {
    pub fn euclidean(dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be positive");
        Self { dim, kind: MetricKind::Euclidean }
    }

    pub fn sphere(dim: usize, radius: f64) -> Self {
        assert!(dim >= 1 && radius > 0.0);
        Self { dim, kind: MetricKind::SpherePolar { radius } }
    }

    pub fn hyperbolic(dim: usize, curvature: f64) -> Self {
        assert!(dim >= 1 && curvature < 0.0);
        Self { dim, kind: MetricKind::HyperbolicBall { curvature } }
    }

    pub fn product(left: ChartedMetric, right: ChartedMetric) -> Self {
        Self { dim: left.dim + right.dim, kind: MetricKind::Product(Box::new(left), Box::new(right)) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &MetricKind {
        &self.kind
    }

    /// Per-axis open intervals bounding the chart domain. For the ball model
    /// the domain is the inscribed ball, not the whole box.
    pub fn domain_box(&self) -> Vec<(f64, f64)> {
        match &self.kind {
            MetricKind::Euclidean => vec![(f64::NEG_INFINITY, f64::INFINITY); self.dim],
            MetricKind::SpherePolar { .. } => {
                let mut b = vec![(0.0, PI); self.dim - 1];
                b.push((-PI, PI));
                b
            }
            MetricKind::HyperbolicBall { curvature } => {
                let r = 1.0 / (-curvature).sqrt();
                vec![(-r, r); self.dim]
            }
            MetricKind::Product(a, b) => {
                let mut v = a.domain_box();
                v.extend(b.domain_box());
                v
            }
        }
    }

    /// Largest sectional curvature attained anywhere on the model.
    pub fn max_sectional_curvature(&self) -> f64 {
        match &self.kind {
            MetricKind::Euclidean => 0.0,
            MetricKind::SpherePolar { radius } => {
                if self.dim >= 2 {
                    1.0 / (radius * radius)
                } else {
                    0.0
                }
            }
            MetricKind::HyperbolicBall { curvature } => {
                if self.dim >= 2 {
                    *curvature
                } else {
                    0.0
                }
            }
            // mixed planes are flat
            MetricKind::Product(a, b) => a.max_sectional_curvature().max(b.max_sectional_curvature()).max(0.0),
        }
    }

    /// Whether the chart carries a constant-curvature metric (so geodesic
    /// simplices are convex hulls with totally geodesic faces).
    pub fn is_constant_curvature(&self) -> bool {
        match &self.kind {
            MetricKind::Product(a, b) => a.is_flat() && b.is_flat(),
            _ => true,
        }
    }

    pub fn is_flat(&self) -> bool {
        match &self.kind {
            MetricKind::Euclidean => true,
            MetricKind::SpherePolar { .. } | MetricKind::HyperbolicBall { .. } => self.dim == 1,
            MetricKind::Product(a, b) => a.is_flat() && b.is_flat(),
        }
    }

    /// Map a point of the unit cube `[0,1]^n` to a comfortable interior
    /// region of the chart (away from poles, seams and the ideal boundary).
    pub fn interior_sample(&self, u: &[f64]) -> Vec<f64> {
        assert_eq!(u.len(), self.dim);
        match &self.kind {
            MetricKind::Euclidean => u.iter().map(|t| 2.0 * t - 1.0).collect(),
            MetricKind::SpherePolar { .. } => {
                let mut x: Vec<f64> = u[..self.dim - 1].iter().map(|t| 0.4 + t * (PI - 0.8)).collect();
                x.push(-2.5 + 5.0 * u[self.dim - 1]);
                x
            }
            MetricKind::HyperbolicBall { curvature } => {
                let a = 0.8 / ((-curvature).sqrt() * (self.dim as f64).sqrt());
                u.iter().map(|t| a * (2.0 * t - 1.0)).collect()
            }
            MetricKind::Product(a, b) => {
                let mut x = a.interior_sample(&u[..a.dim]);
                x.extend(b.interior_sample(&u[a.dim..]));
                x
            }
        }
    }

    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(GeomError::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        if !self.contains(x) {
            return Err(GeomError::OutOfDomain { point: x.to_vec() });
        }
        Ok(())
    }

    fn jet_impl(&self, x: &[f64]) -> MetricJet {
        let n = self.dim;
        let mut jet = MetricJet::zeros(n);
        match &self.kind {
            MetricKind::Euclidean => jet.g = DMatrix::identity(n, n),
            MetricKind::HyperbolicBall { curvature } => {
                let c = -curvature;
                let s: f64 = x.iter().map(|v| v * v).sum();
                let q = 1.0 - c * s;
                let phi = 4.0 / (q * q);
                jet.g = DMatrix::identity(n, n) * phi;
                for k in 0..n {
                    let dphi = 16.0 * c * x[k] / (q * q * q);
                    for i in 0..n {
                        jet.dg[(k * n + i) * n + i] = dphi;
                    }
                    for l in 0..n {
                        let mut ddphi = 96.0 * c * c * x[k] * x[l] / (q * q * q * q);
                        if k == l {
                            ddphi += 16.0 * c / (q * q * q);
                        }
                        for i in 0..n {
                            jet.ddg[((k * n + l) * n + i) * n + i] = ddphi;
                        }
                    }
                }
            }
            MetricKind::SpherePolar { radius } => {
                let cot: Vec<f64> = x.iter().map(|t| t.cos() / t.sin()).collect();
                let mut gii = radius * radius;
                for i in 0..n {
                    if i > 0 {
                        let s = x[i - 1].sin();
                        gii *= s * s;
                    }
                    jet.g[(i, i)] = gii;
                    for k in 0..i {
                        jet.dg[(k * n + i) * n + i] = 2.0 * cot[k] * gii;
                        for l in 0..i {
                            let v =
                                if k == l { (2.0 * cot[k] * cot[k] - 2.0) * gii } else { 4.0 * cot[k] * cot[l] * gii };
                            jet.ddg[((k * n + l) * n + i) * n + i] = v;
                        }
                    }
                }
            }
            MetricKind::Product(a, b) => {
                let ja = a.jet_impl(&x[..a.dim]);
                let jb = b.jet_impl(&x[a.dim..]);
                for (off, j) in [(0usize, &ja), (a.dim, &jb)] {
                    let m = j.dim();
                    for i in 0..m {
                        for jj in 0..m {
                            jet.g[(off + i, off + jj)] = j.g[(i, jj)];
                            for k in 0..m {
                                jet.dg[((off + k) * n + off + i) * n + off + jj] = j.d(k, i, jj);
                                for l in 0..m {
                                    jet.ddg[(((off + k) * n + off + l) * n + off + i) * n + off + jj] =
                                        j.dd(k, l, i, jj);
                                }
                            }
                        }
                    }
                }
            }
        }
        jet
    }
}

impl MetricField for ChartedMetric {
    fn dim(&self) -> usize {
        self.dim
    }

    fn contains(&self, x: &[f64]) -> bool {
        if x.len() != self.dim || x.iter().any(|v| !v.is_finite()) {
            return false;
        }
        match &self.kind {
            MetricKind::Euclidean => true,
            MetricKind::SpherePolar { .. } => {
                x[..self.dim - 1].iter().all(|t| *t > 0.0 && *t < PI) && x[self.dim - 1] > -PI && x[self.dim - 1] < PI
            }
            MetricKind::HyperbolicBall { curvature } => {
                let s: f64 = x.iter().map(|v| v * v).sum();
                -curvature * s < 1.0
            }
            MetricKind::Product(a, b) => a.contains(&x[..a.dim]) && b.contains(&x[a.dim..]),
        }
    }

    fn metric_matrix(&self, x: &[f64]) -> DMatrix<f64> {
        match &self.kind {
            MetricKind::Euclidean => DMatrix::identity(self.dim, self.dim),
            MetricKind::HyperbolicBall { curvature } => {
                let s: f64 = x.iter().map(|v| v * v).sum();
                let q = 1.0 + curvature * s;
                DMatrix::identity(self.dim, self.dim) * (4.0 / (q * q))
            }
            MetricKind::SpherePolar { radius } => {
                let mut g = DMatrix::zeros(self.dim, self.dim);
                let mut gii = radius * radius;
                for i in 0..self.dim {
                    if i > 0 {
                        let s = x[i - 1].sin();
                        gii *= s * s;
                    }
                    g[(i, i)] = gii;
                }
                g
            }
            MetricKind::Product(a, b) => {
                let mut g = DMatrix::zeros(self.dim, self.dim);
                g.view_mut((0, 0), (a.dim, a.dim)).copy_from(&a.metric_matrix(&x[..a.dim]));
                g.view_mut((a.dim, a.dim), (b.dim, b.dim)).copy_from(&b.metric_matrix(&x[a.dim..]));
                g
            }
        }
    }

    fn analytic_jet(&self, x: &[f64]) -> Option<MetricJet> {
        Some(self.jet_impl(x))
    }
}

/// Metric matrix and its determinant at a point.
#[derive(Debug, Clone)]
pub struct MetricAt {
    pub g: DMatrix<f64>,
    pub det: f64,
}

/// Christoffel symbols of the second kind, `Γ^k_ij` stored at `[(k * n + i) * n + j]`.
#[derive(Debug, Clone)]
pub struct Christoffel {
    dim: usize,
    data: Vec<f64>,
}

impl Christoffel {
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[(k * self.dim + i) * self.dim + j]
    }

    /// The vector `Γ(u, v)^k = Γ^k_ij u^i v^j`.
    pub fn contract(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        let n = self.dim;
        (0..n)
            .map(|k| {
                let mut acc = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        acc += self.get(k, i, j) * u[i] * v[j];
                    }
                }
                acc
            })
            .collect()
    }
}

/// Dense rank-4 tensor with all indices running over `0..dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor4 {
    dim: usize,
    data: Vec<f64>,
}

impl Tensor4 {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![0.0; dim.pow(4)] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn idx(&self, a: usize, b: usize, c: usize, d: usize) -> usize {
        ((a * self.dim + b) * self.dim + c) * self.dim + d
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        self.data[self.idx(a, b, c, d)]
    }

    #[inline]
    pub fn set(&mut self, a: usize, b: usize, c: usize, d: usize, v: f64) {
        let i = self.idx(a, b, c, d);
        self.data[i] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Pull back along the columns of `frame` (each column a coordinate vector):
    /// `T'_{abcd} = T(f_a, f_b, f_c, f_d)`.
    pub fn pullback(&self, frame: &DMatrix<f64>) -> Tensor4 {
        let n = self.dim;
        let r = frame.ncols();
        // contract one index at a time: O(n^4 r) instead of O(n^4 r^4)
        let mut t1 = vec![0.0; r * n * n * n];
        for a in 0..r {
            for p in 0..n {
                let f = frame[(p, a)];
                if f == 0.0 {
                    continue;
                }
                for q in 0..n * n * n {
                    t1[a * n * n * n + q] += f * self.data[p * n * n * n + q];
                }
            }
        }
        let mut t2 = vec![0.0; r * r * n * n];
        for a in 0..r {
            for b in 0..r {
                for p in 0..n {
                    let f = frame[(p, b)];
                    for q in 0..n * n {
                        t2[(a * r + b) * n * n + q] += f * t1[a * n * n * n + p * n * n + q];
                    }
                }
            }
        }
        let mut t3 = vec![0.0; r * r * r * n];
        for ab in 0..r * r {
            for c in 0..r {
                for p in 0..n {
                    let f = frame[(p, c)];
                    for q in 0..n {
                        t3[(ab * r + c) * n + q] += f * t2[ab * n * n + p * n + q];
                    }
                }
            }
        }
        let mut out = Tensor4::zeros(r);
        for abc in 0..r * r * r {
            for d in 0..r {
                let mut acc = 0.0;
                for p in 0..n {
                    acc += frame[(p, d)] * t3[abc * n + p];
                }
                out.data[abc * r + d] = acc;
            }
        }
        out
    }

    /// Constant-curvature tensor `K (g_ac g_bd - g_ad g_bc)`.
    pub fn constant_curvature(g: &DMatrix<f64>, k: f64) -> Tensor4 {
        let n = g.nrows();
        let mut t = Tensor4::zeros(n);
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        t.set(a, b, c, d, k * (g[(a, c)] * g[(b, d)] - g[(a, d)] * g[(b, c)]));
                    }
                }
            }
        }
        t
    }

    /// Largest violation of `R_abcd = -R_bacd = -R_abdc = R_cdab`.
    pub fn symmetry_residual(&self) -> f64 {
        let n = self.dim;
        let mut res = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let v = self.get(a, b, c, d);
                        res = res
                            .max((v + self.get(b, a, c, d)).abs())
                            .max((v + self.get(a, b, d, c)).abs())
                            .max((v - self.get(c, d, a, b)).abs());
                    }
                }
            }
        }
        res
    }

    /// Largest violation of the first Bianchi identity `R_abcd + R_acdb + R_adbc = 0`.
    pub fn bianchi_residual(&self) -> f64 {
        let n = self.dim;
        let mut res = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let s = self.get(a, b, c, d) + self.get(a, c, d, b) + self.get(a, d, b, c);
                        res = res.max(s.abs());
                    }
                }
            }
        }
        res
    }
}

/// Curvature quantities at a point, all indices lowered.
#[derive(Debug, Clone)]
pub struct CurvatureData {
    pub point: Vec<f64>,
    pub riemann: Tensor4,
    pub ricci: DMatrix<f64>,
    pub scalar: f64,
    pub metric: DMatrix<f64>,
    pub det_g: f64,
}

impl CurvatureData {
    /// Assemble Ricci and scalar curvature from a lowered Riemann tensor.
    pub fn from_riemann(point: Vec<f64>, metric: DMatrix<f64>, riemann: Tensor4) -> Result<Self> {
        let n = metric.nrows();
        let det_g = metric.determinant();
        let ginv = metric.clone().try_inverse().ok_or(GeomError::NumericalBreakdown { residual: f64::INFINITY })?;
        let mut ricci = DMatrix::zeros(n, n);
        for j in 0..n {
            for k in 0..n {
                let mut acc = 0.0;
                for i in 0..n {
                    for l in 0..n {
                        acc += ginv[(i, l)] * riemann.get(i, j, l, k);
                    }
                }
                ricci[(j, k)] = acc;
            }
        }
        let scalar = (0..n).flat_map(|j| (0..n).map(move |k| (j, k))).map(|(j, k)| ginv[(j, k)] * ricci[(j, k)]).sum();
        Ok(Self { point, riemann, ricci, scalar, metric, det_g })
    }

    /// Sectional curvature of the plane spanned by coordinate vectors `u`, `v`.
    pub fn sectional(&self, u: &[f64], v: &[f64]) -> f64 {
        let n = self.metric.nrows();
        let mut num = 0.0;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        num += self.riemann.get(a, b, c, d) * u[a] * v[b] * u[c] * v[d];
                    }
                }
            }
        }
        let ip = |x: &[f64], y: &[f64]| -> f64 {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    s += self.metric[(i, j)] * x[i] * y[j];
                }
            }
            s
        };
        num / (ip(u, u) * ip(v, v) - ip(u, v).powi(2))
    }
}

pub fn metric_at<M: MetricField + ?Sized>(m: &M, x: &[f64]) -> Result<MetricAt> {
    check(m, x)?;
    let g = m.metric_matrix(x);
    let det = g.determinant();
    Ok(MetricAt { g, det })
}

pub fn christoffel<M: MetricField + ?Sized>(m: &M, x: &[f64]) -> Result<Christoffel> {
    christoffel_with(m, x, Differentiation::Auto)
}

pub fn christoffel_with<M: MetricField + ?Sized>(m: &M, x: &[f64], how: Differentiation) -> Result<Christoffel> {
    check(m, x)?;
    let jet = match (how, m.analytic_jet(x)) {
        (Differentiation::Auto, Some(j)) => j,
        _ => fd_first_jet(m, x),
    };
    Ok(christoffel_from_jet(&jet))
}

pub fn curvature_at<M: MetricField + ?Sized>(m: &M, x: &[f64]) -> Result<CurvatureData> {
    curvature_at_with(m, x, Differentiation::Auto)
}

pub fn curvature_at_with<M: MetricField + ?Sized>(m: &M, x: &[f64], how: Differentiation) -> Result<CurvatureData> {
    check(m, x)?;
    let (jet, gated) = match (how, m.analytic_jet(x)) {
        (Differentiation::Auto, Some(j)) => (j, false),
        _ => (fd_full_jet(m, x), true),
    };
    let riemann = riemann_from_jet(&jet);
    if gated {
        let scale = 1.0 + riemann.max_abs();
        let residual = riemann.symmetry_residual().max(riemann.bianchi_residual()) / scale;
        if !(residual <= FD_SYMMETRY_GATE) {
            return Err(GeomError::NumericalBreakdown { residual });
        }
    }
    CurvatureData::from_riemann(x.to_vec(), jet.g, riemann)
}

/// `(|R|², |Ric|², R²)` with every index raised by the inverse metric and
/// the sums taken over all index tuples.
pub fn curvature_norms(c: &CurvatureData) -> (f64, f64, f64) {
    let n = c.metric.nrows();
    let ginv = c.metric.clone().try_inverse().expect("metric is positive definite");
    // raise each index of R in turn
    let mut up = c.riemann.clone();
    for slot in 0..4 {
        let mut next = Tensor4::zeros(n);
        for a in 0..n {
            for b in 0..n {
                for cc in 0..n {
                    for d in 0..n {
                        let idx = [a, b, cc, d];
                        let mut acc = 0.0;
                        for p in 0..n {
                            let mut j = idx;
                            j[slot] = p;
                            acc += ginv[(idx[slot], p)] * up.get(j[0], j[1], j[2], j[3]);
                        }
                        next.set(a, b, cc, d, acc);
                    }
                }
            }
        }
        up = next;
    }
    let mut r2 = 0.0;
    for (lo, hi) in c.riemann.data.iter().zip(up.data.iter()) {
        r2 += lo * hi;
    }
    let ric_up = &ginv * &c.ricci * &ginv;
    let ric2 = c.ricci.component_mul(&ric_up).sum();
    (r2, ric2, c.scalar * c.scalar)
}

fn check<M: MetricField + ?Sized>(m: &M, x: &[f64]) -> Result<()> {
    if x.len() != m.dim() {
        return Err(GeomError::DimensionMismatch { expected: m.dim(), got: x.len() });
    }
    if !m.contains(x) {
        return Err(GeomError::OutOfDomain { point: x.to_vec() });
    }
    Ok(())
}

fn fd_step(x: &[f64]) -> f64 {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    (1e-5f64).max(1e-5 * norm)
}

fn shifted(x: &[f64], k: usize, h: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    y[k] += h;
    y
}

fn fd_first_jet<M: MetricField + ?Sized>(m: &M, x: &[f64]) -> MetricJet {
    let n = m.dim();
    let h = fd_step(x);
    let mut jet = MetricJet::zeros(n);
    jet.g = m.metric_matrix(x);
    for k in 0..n {
        let gp = m.metric_matrix(&shifted(x, k, h));
        let gm = m.metric_matrix(&shifted(x, k, -h));
        for i in 0..n {
            for j in 0..n {
                jet.dg[(k * n + i) * n + j] = (gp[(i, j)] - gm[(i, j)]) / (2.0 * h);
            }
        }
    }
    jet
}

fn fd_full_jet<M: MetricField + ?Sized>(m: &M, x: &[f64]) -> MetricJet {
    let n = m.dim();
    let mut jet = fd_first_jet(m, x);
    // Second differences amplify rounding by 1/h², so they use a wider step.
    let h = 10.0 * fd_step(x);
    let g0 = &jet.g;
    for k in 0..n {
        for l in k..n {
            let dd = if k == l {
                let gp = m.metric_matrix(&shifted(x, k, h));
                let gm = m.metric_matrix(&shifted(x, k, -h));
                (gp - g0 * 2.0 + gm) / (h * h)
            } else {
                let pp = m.metric_matrix(&shifted(&shifted(x, k, h), l, h));
                let pm = m.metric_matrix(&shifted(&shifted(x, k, h), l, -h));
                let mp = m.metric_matrix(&shifted(&shifted(x, k, -h), l, h));
                let mm = m.metric_matrix(&shifted(&shifted(x, k, -h), l, -h));
                (pp - pm - mp + mm) / (4.0 * h * h)
            };
            for i in 0..n {
                for j in 0..n {
                    jet.ddg[((k * n + l) * n + i) * n + j] = dd[(i, j)];
                    jet.ddg[((l * n + k) * n + i) * n + j] = dd[(i, j)];
                }
            }
        }
    }
    jet
}

fn christoffel_from_jet(jet: &MetricJet) -> Christoffel {
    let n = jet.dim();
    let ginv = jet.g.clone().try_inverse().expect("metric is positive definite");
    let mut data = vec![0.0; n * n * n];
    for k in 0..n {
        for i in 0..n {
            for j in i..n {
                let mut acc = 0.0;
                for l in 0..n {
                    acc += ginv[(k, l)] * (jet.d(i, j, l) + jet.d(j, i, l) - jet.d(l, i, j));
                }
                data[(k * n + i) * n + j] = 0.5 * acc;
                data[(k * n + j) * n + i] = 0.5 * acc;
            }
        }
    }
    Christoffel { dim: n, data }
}

fn riemann_from_jet(jet: &MetricJet) -> Tensor4 {
    let n = jet.dim();
    let gamma = christoffel_from_jet(jet);
    // Γ_{a;bc} = g_ae Γ^e_bc
    let low = |a: usize, b: usize, c: usize| 0.5 * (jet.d(b, c, a) + jet.d(c, b, a) - jet.d(a, b, c));
    // ∂_m Γ_{a;bc}
    let dlow =
        |m: usize, a: usize, b: usize, c: usize| 0.5 * (jet.dd(m, b, c, a) + jet.dd(m, c, b, a) - jet.dd(m, a, b, c));
    let mut r = Tensor4::zeros(n);
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let mut v = dlow(c, a, d, b) - dlow(d, a, c, b);
                    for e in 0..n {
                        v += gamma.get(e, c, b) * low(e, d, a) - gamma.get(e, d, b) * low(e, c, a);
                    }
                    r.set(a, b, c, d, v);
                }
            }
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn descriptors_round_trip() {
        for d in ["euclidean:4", "sphere:2:1", "hyperbolic:4:-1", "hyperbolic:2:-1*hyperbolic:2:-0.5"] {
            let m: ChartedMetric = d.parse().unwrap();
            assert_eq!(m.to_string(), d);
        }
        assert_eq!("hyperbolic:3".parse::<ChartedMetric>().unwrap(), ChartedMetric::hyperbolic(3, -1.0));
        for bad in ["", "torus:2", "sphere:2:-1", "hyperbolic:2:1", "euclidean:0", "euclidean:x"] {
            assert!(bad.parse::<ChartedMetric>().is_err(), "{bad}");
        }
    }
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn euclidean_metric_is_identity() {
        let m = ChartedMetric::euclidean(4);
        let at = metric_at(&m, &[0.3, -1.0, 2.0, 5.0]).unwrap();
        assert_eq!(at.g, DMatrix::identity(4, 4));
        assert_eq!(at.det, 1.0);
        let gam = christoffel(&m, &[0.3, -1.0, 2.0, 5.0]).unwrap();
        assert!(gam.data.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn ball_metric_at_origin() {
        let m = ChartedMetric::hyperbolic(4, -1.0);
        let at = metric_at(&m, &[0.0; 4]).unwrap();
        assert_eq!(at.g, DMatrix::identity(4, 4) * 4.0);
        assert_relative_eq!(at.det, 256.0, max_relative = 1e-14);

        let p = ChartedMetric::product(ChartedMetric::hyperbolic(2, -1.0), ChartedMetric::hyperbolic(2, -1.0));
        let at = metric_at(&p, &[0.0; 4]).unwrap();
        assert_eq!(at.g, DMatrix::identity(4, 4) * 4.0);
    }

    #[test]
    fn out_of_domain_points_are_rejected() {
        let m = ChartedMetric::hyperbolic(2, -1.0);
        assert!(matches!(metric_at(&m, &[0.8, 0.7]), Err(GeomError::OutOfDomain { .. })));
        let s = ChartedMetric::sphere(2, 1.0);
        assert!(matches!(curvature_at(&s, &[0.0, 0.1]), Err(GeomError::OutOfDomain { .. })));
        assert!(matches!(christoffel(&s, &[1.0, 3.2]), Err(GeomError::OutOfDomain { .. })));
        assert!(matches!(metric_at(&s, &[1.0]), Err(GeomError::DimensionMismatch { .. })));
    }

    #[test]
    fn sphere_christoffel_by_hand() {
        let m = ChartedMetric::sphere(2, 1.0);
        let th = 0.7;
        let gam = christoffel(&m, &[th, 0.4]).unwrap();
        assert_relative_eq!(gam.get(0, 1, 1), -th.sin() * th.cos(), epsilon = 1e-14);
        assert_relative_eq!(gam.get(1, 0, 1), th.cos() / th.sin(), epsilon = 1e-14);
        assert_relative_eq!(gam.get(1, 1, 0), th.cos() / th.sin(), epsilon = 1e-14);
        assert_relative_eq!(gam.get(0, 0, 0), 0.0);
        // finite differences agree
        let fd = christoffel_with(&m, &[th, 0.4], Differentiation::FiniteDifference).unwrap();
        for (a, b) in gam.data.iter().zip(fd.data.iter()) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn product_christoffel_is_blockwise() {
        let a = ChartedMetric::sphere(2, 1.0);
        let b = ChartedMetric::hyperbolic(2, -1.0);
        let p = ChartedMetric::product(a.clone(), b.clone());
        let x = [1.1, 0.2, 0.3, -0.1];
        let gp = christoffel(&p, &x).unwrap();
        let ga = christoffel(&a, &x[..2]).unwrap();
        let gb = christoffel(&b, &x[2..]).unwrap();
        for k in 0..4 {
            for i in 0..4 {
                for j in 0..4 {
                    let expect = match (k < 2, i < 2, j < 2) {
                        (true, true, true) => ga.get(k, i, j),
                        (false, false, false) => gb.get(k - 2, i - 2, j - 2),
                        _ => 0.0,
                    };
                    assert_relative_eq!(gp.get(k, i, j), expect, epsilon = 1e-15);
                }
            }
        }
    }

    #[test]
    fn unit_sphere_has_positive_curvature() {
        let m = ChartedMetric::sphere(2, 1.0);
        let c = curvature_at(&m, &[FRAC_PI_2, 0.3]).unwrap();
        assert_relative_eq!(c.riemann.get(0, 1, 0, 1) / c.det_g, 1.0, epsilon = 1e-12);
        assert_relative_eq!(c.scalar, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn flat_curvature_vanishes() {
        let m = ChartedMetric::euclidean(3);
        let c = curvature_at(&m, &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(c.riemann.max_abs(), 0.0);
        assert_eq!(curvature_norms(&c), (0.0, 0.0, 0.0));
    }

    #[test]
    fn norms_of_unit_s4_and_h2xh2() {
        let s4 = ChartedMetric::sphere(4, 1.0);
        let c = curvature_at(&s4, &[1.0, 1.3, 2.0, 0.5]).unwrap();
        let (r2, ric2, sc2) = curvature_norms(&c);
        assert_relative_eq!(r2, 24.0, max_relative = 1e-10);
        assert_relative_eq!(ric2, 36.0, max_relative = 1e-10);
        assert_relative_eq!(sc2, 144.0, max_relative = 1e-10);

        let p = ChartedMetric::product(ChartedMetric::hyperbolic(2, -1.0), ChartedMetric::hyperbolic(2, -1.0));
        let c = curvature_at(&p, &[0.1, -0.2, 0.3, 0.05]).unwrap();
        let (r2, ric2, sc2) = curvature_norms(&c);
        assert_relative_eq!(r2, 8.0, max_relative = 1e-10);
        assert_relative_eq!(ric2, 4.0, max_relative = 1e-10);
        assert_relative_eq!(sc2, 16.0, max_relative = 1e-10);
        assert_relative_eq!(c.scalar, -4.0, max_relative = 1e-10);
    }

    #[test]
    fn h2xh2_orthonormal_components() {
        let p = ChartedMetric::product(ChartedMetric::hyperbolic(2, -1.0), ChartedMetric::hyperbolic(2, -1.0));
        let c = curvature_at(&p, &[0.0; 4]).unwrap();
        // orthonormal frame at the origin is ∂_i / 2
        let frame = DMatrix::identity(4, 4) * 0.5;
        let r = c.riemann.pullback(&frame);
        assert_relative_eq!(r.get(0, 1, 0, 1), -1.0, epsilon = 1e-12);
        assert_relative_eq!(r.get(2, 3, 2, 3), -1.0, epsilon = 1e-12);
        assert_relative_eq!(r.get(0, 2, 0, 2), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn finite_difference_curvature_matches_analytic() {
        let m = ChartedMetric::sphere(4, 1.0);
        let x = [1.0, 1.3, 2.0, 0.5];
        let a = curvature_at(&m, &x).unwrap();
        let f = curvature_at_with(&m, &x, Differentiation::FiniteDifference).unwrap();
        let mut diff = 0.0f64;
        for (p, q) in a.riemann.data.iter().zip(f.riemann.data.iter()) {
            diff = diff.max((p - q).abs());
        }
        assert!(diff < 1e-5, "max deviation {diff:e}");
    }

    struct Wobbly;

    impl MetricField for Wobbly {
        fn dim(&self) -> usize {
            2
        }
        fn contains(&self, _x: &[f64]) -> bool {
            true
        }
        fn metric_matrix(&self, x: &[f64]) -> DMatrix<f64> {
            let u = 0.1 * x[0] * x[0] - 0.2 * x[1];
            DMatrix::identity(2, 2) * (2.0 * u).exp()
        }
    }

    #[test]
    fn generic_field_uses_finite_differences() {
        // K = -e^{-2u} Δu with Δu = 0.2
        let x = [0.4, -0.3];
        let c = curvature_at(&Wobbly, &x).unwrap();
        let u = 0.1 * x[0] * x[0] - 0.2 * x[1];
        let k = c.riemann.get(0, 1, 0, 1) / c.det_g;
        assert_relative_eq!(k, -(-2.0 * u).exp() * 0.2, epsilon = 1e-5);
    }
}
