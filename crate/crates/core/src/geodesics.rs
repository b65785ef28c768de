//! Exponential and logarithm maps, point-to-point geodesics.
//!
//! Model charts use closed forms (great circles through the ambient
//! embedding, Möbius gyrovector formulas on the ball). A classical RK4
//! integrator and a Newton shooting solver are provided for arbitrary
//! [`MetricField`]s and double as independent checks of the closed forms.
//!
//! All geodesics are parameterized over `[0, 1]`: `γ(0) = x`, `γ'(0) = v`.

use nalgebra::{DMatrix, DVector};

use crate::error::{GeomError, Result};
use crate::metrics::{christoffel, ChartedMetric, MetricField, MetricKind};

/// Antipodal tolerance (radians) for the spherical logarithm.
const CUT_LOCUS_MARGIN: f64 = 1e-7;

pub fn exp_map(m: &ChartedMetric, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    m.check_point(x)?;
    if v.len() != m.dim() {
        return Err(GeomError::DimensionMismatch { expected: m.dim(), got: v.len() });
    }
    exp_unchecked(m, x, v)
}

pub fn log_map(m: &ChartedMetric, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    m.check_point(x)?;
    m.check_point(y)?;
    log_unchecked(m, x, y)
}

/// Riemannian distance `|log_x y|_g`.
pub fn distance(m: &ChartedMetric, x: &[f64], y: &[f64]) -> Result<f64> {
    let v = log_map(m, x, y)?;
    Ok(norm_g(&m.metric_matrix(x), &v))
}

pub(crate) fn exp_unchecked(m: &ChartedMetric, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    let y = match m.kind() {
        MetricKind::Euclidean => x.iter().zip(v).map(|(a, b)| a + b).collect(),
        MetricKind::HyperbolicBall { curvature } => ball_exp(-curvature, x, v),
        MetricKind::SpherePolar { radius } => sphere_exp(*radius, x, v)?,
        MetricKind::Product(a, b) => {
            let k = a.dim();
            let mut y = exp_unchecked(a, &x[..k], &v[..k])?;
            y.extend(exp_unchecked(b, &x[k..], &v[k..])?);
            y
        }
    };
    if !m.contains(&y) {
        return Err(GeomError::LeftChartDomain { point: y });
    }
    Ok(y)
}

pub(crate) fn log_unchecked(m: &ChartedMetric, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    match m.kind() {
        MetricKind::Euclidean => Ok(y.iter().zip(x).map(|(a, b)| a - b).collect()),
        MetricKind::HyperbolicBall { curvature } => Ok(ball_log(-curvature, x, y)),
        MetricKind::SpherePolar { radius } => sphere_log(*radius, x, y),
        MetricKind::Product(a, b) => {
            let k = a.dim();
            let mut v = log_unchecked(a, &x[..k], &y[..k])?;
            v.extend(log_unchecked(b, &x[k..], &y[k..])?);
            Ok(v)
        }
    }
}

pub(crate) fn norm_g(g: &DMatrix<f64>, v: &[f64]) -> f64 {
    inner_g(g, v, v).max(0.0).sqrt()
}

pub(crate) fn inner_g(g: &DMatrix<f64>, u: &[f64], v: &[f64]) -> f64 {
    let n = u.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += g[(i, j)] * u[i] * v[j];
        }
    }
    s
}

// ---------------------------------------------------------------- ball model

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

/// Möbius addition on the ball of curvature `-c`, given `ux = 1 - c|x|²`
/// and `uy = 1 - c|y|²`. Returns the sum and its denominator.
///
/// Written as sums of nonnegative terms,
/// `x ⊕ y = (ux (x + y) + c|x + y|² x) / (c|x + y|² + ux uy)`,
/// so nearly opposite points near the boundary do not cancel.
fn mobius_add(c: f64, x: &[f64], y: &[f64], ux: f64, uy: f64) -> (Vec<f64>, f64) {
    let s: Vec<f64> = x.iter().zip(y).map(|(p, q)| p + q).collect();
    let ss = c * dot(&s, &s);
    let den = ss + ux * uy;
    (x.iter().zip(&s).map(|(p, q)| (ux * q + ss * p) / den).collect(), den)
}

fn ball_exp(c: f64, x: &[f64], v: &[f64]) -> Vec<f64> {
    let nv = dot(v, v).sqrt();
    if nv == 0.0 {
        return x.to_vec();
    }
    let sc = c.sqrt();
    let ux = 1.0 - c * dot(x, x);
    let a = sc * nv / ux; // half the geodesic length times √c
    let s = a.tanh() / (sc * nv);
    let uy = 1.0 / (a.cosh() * a.cosh());
    let step: Vec<f64> = v.iter().map(|t| s * t).collect();
    mobius_add(c, x, &step, ux, uy).0
}

fn ball_log(c: f64, x: &[f64], y: &[f64]) -> Vec<f64> {
    let neg: Vec<f64> = x.iter().map(|t| -t).collect();
    let ux = 1.0 - c * dot(x, x);
    let uy = 1.0 - c * dot(y, y);
    let (w, den) = mobius_add(c, &neg, y, ux, uy);
    let nw = dot(&w, &w).sqrt();
    if nw == 0.0 {
        return vec![0.0; x.len()];
    }
    let sc = c.sqrt();
    // artanh(z) = ln(1 + z) - ln(1 - z²)/2 with 1 - z² = ux uy / den exactly
    let z = sc * nw;
    let one_minus_z2 = ux * uy / den;
    let half_len = z.ln_1p() - 0.5 * one_minus_z2.ln();
    let s = ux / sc * half_len / nw;
    w.iter().map(|t| s * t).collect()
}

// ------------------------------------------------------------ sphere model

/// Hyperspherical coordinates to the embedding in `R^{n+1}`.
pub(crate) fn sphere_embed(radius: f64, x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut out = Vec::with_capacity(n + 1);
    let mut prod = radius;
    for th in &x[..n - 1] {
        out.push(prod * th.cos());
        prod *= th.sin();
    }
    let phi = x[n - 1];
    out.push(prod * phi.cos());
    out.push(prod * phi.sin());
    out
}

/// Columns are the coordinate tangent vectors `∂X/∂x_k` in `R^{n+1}`.
fn sphere_jacobian(radius: f64, x: &[f64]) -> DMatrix<f64> {
    let n = x.len();
    let mut j = DMatrix::zeros(n + 1, n);
    for k in 0..n {
        // derivative of X w.r.t. x_k, built factor by factor
        let mut prod = radius;
        let mut dprod = 0.0; // ∂prod/∂x_k
        for (a, th) in x[..n - 1].iter().enumerate() {
            let (s, c) = th.sin_cos();
            let d_trig = if a == k { -s } else { 0.0 };
            j[(a, k)] = dprod * c + prod * d_trig;
            let d_s = if a == k { c } else { 0.0 };
            dprod = dprod * s + prod * d_s;
            prod *= s;
        }
        let (s, c) = x[n - 1].sin_cos();
        let last = k == n - 1;
        j[(n - 1, k)] = dprod * c + if last { -prod * s } else { 0.0 };
        j[(n, k)] = dprod * s + if last { prod * c } else { 0.0 };
    }
    j
}

fn sphere_coords(big: &[f64]) -> Vec<f64> {
    let n = big.len() - 1;
    let mut x = Vec::with_capacity(n);
    for i in 0..n - 1 {
        let tail: f64 = big[i + 1..].iter().map(|v| v * v).sum::<f64>().sqrt();
        x.push(tail.atan2(big[i]));
    }
    x.push(big[n].atan2(big[n - 1]));
    x
}

fn sphere_exp(radius: f64, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    let j = sphere_jacobian(radius, x);
    let w = &j * DVector::from_column_slice(v);
    let nw = w.norm();
    if nw == 0.0 {
        return Ok(x.to_vec());
    }
    let big0 = sphere_embed(radius, x);
    let a = nw / radius;
    let (s, c) = a.sin_cos();
    let big1: Vec<f64> = big0.iter().zip(w.iter()).map(|(p, q)| c * p + radius * s * q / nw).collect();
    let y = sphere_coords(&big1);
    // crossing the φ seam shows up as a wrapped longitude
    if (y[x.len() - 1] - x[x.len() - 1]).abs() > std::f64::consts::PI {
        return Err(GeomError::LeftChartDomain { point: y });
    }
    Ok(y)
}

fn sphere_log(radius: f64, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    let b0 = sphere_embed(radius, x);
    let b1 = sphere_embed(radius, y);
    let cosr = dot(&b0, &b1) / (radius * radius);
    let u: Vec<f64> = b1.iter().zip(&b0).map(|(p, q)| p - cosr * q).collect();
    let nu = dot(&u, &u).sqrt();
    if nu == 0.0 && cosr > 0.0 {
        return Ok(vec![0.0; x.len()]);
    }
    let angle = (nu / radius).atan2(cosr);
    if angle > std::f64::consts::PI - CUT_LOCUS_MARGIN {
        return Err(GeomError::CutLocus);
    }
    let w = DVector::from_iterator(u.len(), u.iter().map(|t| radius * angle * t / nu));
    let j = sphere_jacobian(radius, x);
    let g = j.transpose() * &j;
    let rhs = j.transpose() * w;
    let v = g.cholesky().ok_or(GeomError::OutOfDomain { point: x.to_vec() })?.solve(&rhs);
    Ok(v.iter().copied().collect())
}

// --------------------------------------------------------------- paths

#[derive(Debug, Clone)]
pub struct GeodesicSample {
    pub t: f64,
    pub point: Vec<f64>,
    pub velocity: Vec<f64>,
}

/// A sampled geodesic segment between two chart points.
#[derive(Debug, Clone)]
pub struct GeodesicPath {
    pub chart: ChartedMetric,
    pub start: Vec<f64>,
    pub end: Vec<f64>,
    pub initial_velocity: Vec<f64>,
    pub samples: Vec<GeodesicSample>,
}

impl GeodesicPath {
    pub fn speeds(&self) -> Vec<f64> {
        self.samples.iter().map(|s| norm_g(&self.chart.metric_matrix(&s.point), &s.velocity)).collect()
    }

    /// Largest relative deviation of the speed from its mean.
    pub fn speed_variation(&self) -> f64 {
        let sp = self.speeds();
        let mean = sp.iter().sum::<f64>() / sp.len() as f64;
        if mean == 0.0 {
            return 0.0;
        }
        sp.iter().fold(0.0f64, |m, s| m.max((s - mean).abs() / mean))
    }

    /// Length by Simpson's rule on the sampled speeds (odd sample counts)
    /// or the trapezoid rule otherwise.
    pub fn length(&self) -> f64 {
        let sp = self.speeds();
        let k = sp.len();
        if k < 2 {
            return 0.0;
        }
        let h = 1.0 / (k - 1) as f64;
        if k % 2 == 1 && k >= 3 {
            let mut acc = sp[0] + sp[k - 1];
            for (i, s) in sp.iter().enumerate().take(k - 1).skip(1) {
                acc += if i % 2 == 1 { 4.0 * s } else { 2.0 * s };
            }
            acc * h / 3.0
        } else {
            let inner: f64 = sp[1..k - 1].iter().sum();
            h * (inner + 0.5 * (sp[0] + sp[k - 1]))
        }
    }

    /// Max coordinate norm of `γ'' + Γ(γ', γ')` at the midpoints between samples,
    /// with `γ''` from central differences of the exact curve.
    pub fn equation_residual(&self) -> Result<f64> {
        let step = 1e-4;
        let mut worst = 0.0f64;
        let at = |t: f64| exp_unchecked(&self.chart, &self.start, &scaled(&self.initial_velocity, t));
        for pair in self.samples.windows(2) {
            let t = 0.5 * (pair[0].t + pair[1].t);
            let (ym, y0, yp) = (at(t - step)?, at(t)?, at(t + step)?);
            let acc: Vec<f64> = (0..y0.len()).map(|i| (yp[i] - 2.0 * y0[i] + ym[i]) / (step * step)).collect();
            let vel: Vec<f64> = (0..y0.len()).map(|i| (yp[i] - ym[i]) / (2.0 * step)).collect();
            let gam = christoffel(&self.chart, &y0)?.contract(&vel, &vel);
            let r = acc.iter().zip(&gam).map(|(a, b)| (a + b).powi(2)).sum::<f64>().sqrt();
            worst = worst.max(r);
        }
        Ok(worst)
    }
}

fn scaled(v: &[f64], t: f64) -> Vec<f64> {
    v.iter().map(|a| a * t).collect()
}

/// The geodesic from `x` to `y`, sampled at `n_samples ≥ 2` equispaced times.
pub fn geodesic_between(m: &ChartedMetric, x: &[f64], y: &[f64], n_samples: usize) -> Result<GeodesicPath> {
    let n_samples = n_samples.max(2);
    let v = log_map(m, x, y)?;
    let mut samples = Vec::with_capacity(n_samples);
    for i in 0..n_samples {
        let t = i as f64 / (n_samples - 1) as f64;
        let (point, velocity) = if i == 0 {
            (x.to_vec(), v.clone())
        } else if i == n_samples - 1 {
            let back = log_unchecked(m, y, x)?;
            (y.to_vec(), back.iter().map(|a| -a).collect())
        } else {
            let p = exp_unchecked(m, x, &scaled(&v, t))?;
            let rest = log_unchecked(m, &p, y)?;
            let vel = scaled(&rest, 1.0 / (1.0 - t));
            (p, vel)
        };
        samples.push(GeodesicSample { t, point, velocity });
    }
    Ok(GeodesicPath { chart: m.clone(), start: x.to_vec(), end: y.to_vec(), initial_velocity: v, samples })
}

// ------------------------------------------------------- numerical solvers

#[derive(Debug, Clone, Copy)]
pub struct Rk4Options {
    pub steps: usize,
    pub richardson_tol: f64,
    pub max_doublings: usize,
}

impl Default for Rk4Options {
    fn default() -> Self {
        Self { steps: 256, richardson_tol: 1e-9, max_doublings: 8 }
    }
}

fn geodesic_rhs<M: MetricField + ?Sized>(m: &M, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    let g = christoffel(m, x)?;
    Ok(g.contract(v, v).into_iter().map(|a| -a).collect())
}

fn rk4_fixed<M: MetricField + ?Sized>(m: &M, x: &[f64], v: &[f64], steps: usize) -> Result<Vec<f64>> {
    let n = x.len();
    let h = 1.0 / steps as f64;
    let mut p = x.to_vec();
    let mut q = v.to_vec();
    let lift = |e: GeomError| match e {
        GeomError::OutOfDomain { point } => GeomError::LeftChartDomain { point },
        other => other,
    };
    let axpy = |a: &[f64], s: f64, b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(u, w)| u + s * w).collect() };
    for _ in 0..steps {
        let k1x = q.clone();
        let k1v = geodesic_rhs(m, &p, &q).map_err(lift)?;
        let k2x = axpy(&q, 0.5 * h, &k1v);
        let k2v = geodesic_rhs(m, &axpy(&p, 0.5 * h, &k1x), &k2x).map_err(lift)?;
        let k3x = axpy(&q, 0.5 * h, &k2v);
        let k3v = geodesic_rhs(m, &axpy(&p, 0.5 * h, &k2x), &k3x).map_err(lift)?;
        let k4x = axpy(&q, h, &k3v);
        let k4v = geodesic_rhs(m, &axpy(&p, h, &k3x), &k4x).map_err(lift)?;
        for i in 0..n {
            p[i] += h / 6.0 * (k1x[i] + 2.0 * k2x[i] + 2.0 * k3x[i] + k4x[i]);
            q[i] += h / 6.0 * (k1v[i] + 2.0 * k2v[i] + 2.0 * k3v[i] + k4v[i]);
        }
    }
    if !m.contains(&p) {
        return Err(GeomError::LeftChartDomain { point: p });
    }
    Ok(p)
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()))
}

/// Integrate the geodesic equation with RK4, doubling the step count until
/// two successive endpoints agree to `richardson_tol`.
pub fn exp_map_rk4<M: MetricField + ?Sized>(m: &M, x: &[f64], v: &[f64], opts: Rk4Options) -> Result<Vec<f64>> {
    Ok(rk4_adaptive(m, x, v, opts)?.0)
}

fn rk4_adaptive<M: MetricField + ?Sized>(m: &M, x: &[f64], v: &[f64], opts: Rk4Options) -> Result<(Vec<f64>, usize)> {
    let mut steps = opts.steps.max(1);
    let mut prev = rk4_fixed(m, x, v, steps)?;
    for _ in 0..opts.max_doublings {
        steps *= 2;
        let next = rk4_fixed(m, x, v, steps)?;
        if max_diff(&prev, &next) <= opts.richardson_tol {
            return Ok((next, steps));
        }
        prev = next;
    }
    Ok((prev, steps))
}

#[derive(Debug, Clone, Copy)]
pub struct ShootingOptions {
    pub max_iterations: usize,
    pub tol: f64,
    pub rk4: Rk4Options,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        Self { max_iterations: 50, tol: 1e-10, rk4: Rk4Options::default() }
    }
}

/// Logarithm by damped Newton iteration on `v ↦ exp_x(v)` with a
/// finite-difference Jacobian, starting from the coordinate chord `y - x`.
pub fn log_map_shooting<M: MetricField + ?Sized>(
    m: &M,
    x: &[f64],
    y: &[f64],
    opts: ShootingOptions,
) -> Result<Vec<f64>> {
    let n = x.len();
    if !m.contains(x) {
        return Err(GeomError::OutOfDomain { point: x.to_vec() });
    }
    if !m.contains(y) {
        return Err(GeomError::OutOfDomain { point: y.to_vec() });
    }
    let mut v: Vec<f64> = y.iter().zip(x).map(|(a, b)| a - b).collect();
    // the step count is frozen so Newton sees one smooth map
    let (_, steps) = rk4_adaptive(m, x, &v, opts.rk4)?;
    let residual =
        |v: &[f64]| -> Result<Vec<f64>> { Ok(rk4_fixed(m, x, v, steps)?.iter().zip(y).map(|(a, b)| a - b).collect()) };
    let norm = |r: &[f64]| r.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    let mut f = residual(&v)?;
    let mut res = norm(&f);
    for it in 0..opts.max_iterations {
        if res <= opts.tol {
            return Ok(v);
        }
        let h = 1e-7 * (1.0 + norm(&v));
        let mut jac = DMatrix::zeros(n, n);
        for k in 0..n {
            let mut vp = v.clone();
            vp[k] += h;
            let mut vm = v.clone();
            vm[k] -= h;
            let fp = residual(&vp)?;
            let fm = residual(&vm)?;
            for i in 0..n {
                jac[(i, k)] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        let step = jac
            .lu()
            .solve(&DVector::from_iterator(n, f.iter().map(|a| -a)))
            .ok_or(GeomError::NoConvergence { iterations: it, residual: res })?;
        let mut damping = 1.0;
        let mut accepted = false;
        for _ in 0..12 {
            let trial: Vec<f64> = v.iter().zip(step.iter()).map(|(a, s)| a + damping * s).collect();
            if let Ok(ft) = residual(&trial) {
                let rt = norm(&ft);
                if rt < res {
                    v = trial;
                    f = ft;
                    res = rt;
                    accepted = true;
                    break;
                }
            }
            damping *= 0.5;
        }
        if !accepted {
            return Err(GeomError::NoConvergence { iterations: it + 1, residual: res });
        }
    }
    if res <= opts.tol {
        Ok(v)
    } else {
        Err(GeomError::NoConvergence { iterations: opts.max_iterations, residual: res })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn flat_exp_and_log() {
        let m = ChartedMetric::euclidean(3);
        assert_eq!(exp_map(&m, &[1.0, 2.0, 3.0], &[0.5, 0.0, -1.0]).unwrap(), vec![1.5, 2.0, 2.0]);
        assert_eq!(log_map(&m, &[1.0, 2.0, 3.0], &[0.5, 0.0, -1.0]).unwrap(), vec![-0.5, -2.0, -4.0]);
    }

    #[test]
    fn ball_exp_from_origin_is_tanh() {
        let m = ChartedMetric::hyperbolic(2, -1.0);
        let v = [0.3, -0.4];
        let y = exp_map(&m, &[0.0, 0.0], &v).unwrap();
        // |v|_g = 2 |v| at the origin
        let speed = norm_g(&m.metric_matrix(&[0.0, 0.0]), &v);
        let r = (speed / 2.0).tanh();
        assert_relative_eq!(y[0], r * 0.6, epsilon = 1e-15);
        assert_relative_eq!(y[1], -r * 0.8, epsilon = 1e-15);
        let rk = exp_map_rk4(&m, &[0.0, 0.0], &v, Rk4Options::default()).unwrap();
        assert!(max_diff(&rk, &y) < 1e-8);
    }

    #[test]
    fn sphere_equator_to_pole_distance() {
        // from the equator, moving north a quarter circle minus a bit
        let m = ChartedMetric::sphere(2, 1.0);
        let x = [FRAC_PI_2, 0.3];
        let y = exp_map(&m, &x, &[-(FRAC_PI_2 - 0.1), 0.0]).unwrap();
        assert_relative_eq!(y[0], 0.1, epsilon = 1e-13);
        assert_relative_eq!(y[1], 0.3, epsilon = 1e-13);
        assert_relative_eq!(distance(&m, &x, &y).unwrap(), FRAC_PI_2 - 0.1, epsilon = 1e-13);
    }

    #[test]
    fn sphere_cut_locus() {
        let m = ChartedMetric::sphere(2, 1.0);
        let err = log_map(&m, &[FRAC_PI_2, 0.5], &[FRAC_PI_2, 0.5 - PI]).unwrap_err();
        assert_eq!(err, GeomError::CutLocus);
    }

    #[test]
    fn ball_exp_can_leave_chart() {
        let m = ChartedMetric::hyperbolic(2, -1.0);
        let err = exp_map(&m, &[0.0, 0.0], &[100.0, 0.0]).unwrap_err();
        assert!(matches!(err, GeomError::LeftChartDomain { .. }));
    }

    #[test]
    fn product_log_is_pair_of_factor_logs() {
        let h = ChartedMetric::hyperbolic(2, -1.0);
        let p = ChartedMetric::product(h.clone(), h.clone());
        let x = [0.1, 0.2, -0.3, 0.0];
        let y = [-0.4, 0.1, 0.2, 0.5];
        let v = log_map(&p, &x, &y).unwrap();
        let a = log_map(&h, &x[..2], &y[..2]).unwrap();
        let b = log_map(&h, &x[2..], &y[2..]).unwrap();
        assert_eq!(&v[..2], &a[..]);
        assert_eq!(&v[2..], &b[..]);
    }

    #[test]
    fn near_boundary_pair_has_closed_form_length() {
        let m = ChartedMetric::hyperbolic(2, -1.0);
        let x = [0.0, 0.0];
        let y = [0.999, 0.0];
        let path = geodesic_between(&m, &x, &y, 401).unwrap();
        let exact = 2.0 * 0.999f64.atanh();
        assert_relative_eq!(distance(&m, &x, &y).unwrap(), exact, max_relative = 1e-12);
        assert!(path.speed_variation() < 1e-6);
        assert_relative_eq!(path.length(), exact, max_relative = 1e-6);
    }

    #[test]
    fn path_endpoints_and_equation() {
        let m = ChartedMetric::sphere(2, 1.0);
        let path = geodesic_between(&m, &[1.0, -0.5], &[1.9, 0.7], 9).unwrap();
        assert_eq!(path.samples[0].point, vec![1.0, -0.5]);
        assert!(max_diff(&path.samples[8].point, &[1.9, 0.7]) < 1e-12);
        assert!(path.speed_variation() < 1e-9);
        assert!(path.equation_residual().unwrap() < 1e-5);
    }

    #[test]
    fn shooting_matches_closed_form() {
        let m = ChartedMetric::hyperbolic(3, -1.0);
        let x = [0.1, -0.2, 0.3];
        let y = [-0.3, 0.25, 0.1];
        let exact = log_map(&m, &x, &y).unwrap();
        let shot = log_map_shooting(&m, &x, &y, ShootingOptions::default()).unwrap();
        assert!(max_diff(&exact, &shot) < 1e-6, "{exact:?} vs {shot:?}");
    }
}
