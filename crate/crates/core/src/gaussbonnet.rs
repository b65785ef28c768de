//! Face contributions, the simplicial Gauss–Bonnet identity and the
//! per-simplex budget behind the `|χ| ≤ 11 ‖M‖` bound.
//!
//! The contribution of an `r`-face is `∫_F dv(x) ∫_{N(x)*} Ψ_r(x, ξ) dξ`
//! (`Ψ_n` alone for the top cell). Face integrals are taken in collapsed
//! coordinates with tensor Gauss–Legendre rules; inner cone integrals are
//! exact, one-dimensional or Monte Carlo depending on the codimension.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::geodesics::{inner_g, log_map};
use crate::integrands::{psi_extrinsic_rf, psi_intrinsic, sphere_area, FrameData};
use crate::metrics::{curvature_at, curvature_at_with, ChartedMetric, Differentiation, MetricField, MetricKind};
use crate::quadrature::{
    integrate_collapsed, integrate_dual_cone, integrate_normal_sphere, mc_rng, tensor_nodes, QuadResult,
};
use crate::simplices::{ConeOptions, Face, FaceGeometry, GeodesicSimplex, NormalConeSample};

/// Tolerance on the theorem budget ranges.
pub const BUDGET_EPS: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Budgets {
    /// Gauss–Legendre points per collapsed coordinate.
    pub order: usize,
    /// Monte Carlo samples per cone integral.
    pub mc_samples: usize,
    pub cone_lattice: usize,
    pub arc_lattice: usize,
}

impl Default for Budgets {
    fn default() -> Self {
        Self { order: 8, mc_samples: 200_000, cone_lattice: 8, arc_lattice: 64 }
    }
}

impl Budgets {
    fn cone(&self) -> ConeOptions {
        ConeOptions { lattice: self.cone_lattice, arc_lattice: self.arc_lattice }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaceContribution {
    pub r: usize,
    pub face: Vec<usize>,
    pub value: f64,
    /// Monte Carlo standard error (zero for deterministic strata).
    pub std_error: f64,
    /// Change against a coarser outer rule, when one was run.
    pub quad_error: Option<f64>,
    /// `(f, ∫∫ Ψ_{r,f})`; for the top cell a single intrinsic entry.
    pub breakdown: Vec<(usize, f64)>,
}

/// Stream id for the Monte Carlo task at one quadrature node of one face.
fn stream_id(face: &[usize], node: usize) -> u64 {
    let mask: u64 = face.iter().map(|&i| 1u64 << i).sum();
    (mask << 32) | node as u64
}

/// Per-`f` inner integrals over the dual cone at one face point.
fn inner_terms(
    fd: &FrameData,
    cone: &NormalConeSample,
    r: usize,
    n: usize,
    mc_samples: usize,
    seed: u64,
    stream: u64,
) -> Result<Vec<QuadResult>> {
    let c = n - r;
    let mut rng = mc_rng(seed, stream);
    if c >= 3 {
        // only r ≤ 1 occurs here and Ψ_r is affine in ξ: precompute it
        let base = psi_extrinsic_rf(fd, &vec![0.0; c], r, 0, n)?;
        let mut lin = vec![0.0; c];
        if r > 0 {
            for (a, l) in lin.iter_mut().enumerate() {
                let mut e = vec![0.0; c];
                e[a] = 1.0;
                *l = psi_extrinsic_rf(fd, &e, r, 0, n)? - base;
            }
        }
        let q = integrate_dual_cone(
            |xi| base + lin.iter().zip(xi).map(|(a, b)| a * b).sum::<f64>(),
            cone,
            mc_samples,
            &mut rng,
        );
        return Ok(vec![q]);
    }
    let mut out = Vec::new();
    for f in 0..=r / 2 {
        let q = integrate_dual_cone(
            |xi| psi_extrinsic_rf(fd, xi, r, f, n).expect("indices checked"),
            cone,
            mc_samples,
            &mut rng,
        );
        out.push(q);
    }
    Ok(out)
}

fn node_frame(face: &Face<'_>, geo: &FaceGeometry) -> Result<FrameData> {
    let chart = face.parent.chart();
    if face.r() >= 2 {
        let curv = curvature_at(chart, &geo.point)?;
        Ok(FrameData::from_geometry(geo, &curv))
    } else {
        Ok(FrameData {
            point: geo.point.clone(),
            riemann: crate::metrics::Tensor4::zeros(face.r()),
            gamma: 1.0,
            lambda: geo.lambda.clone(),
        })
    }
}

/// Outer sum over tensor nodes of per-`f` inner values; returns per-`f`
/// (value, variance) in a fixed order.
fn outer_pass(face: &Face<'_>, budgets: &Budgets, seed: u64, points: usize) -> Result<Vec<(f64, f64)>> {
    let r = face.r();
    let n = face.parent.chart().dim();
    let nodes = tensor_nodes(r, points);
    let per_node: Vec<Result<Vec<(f64, f64)>>> = nodes
        .par_iter()
        .enumerate()
        .map(|(idx, (u, w))| {
            let geo = face.geometry(u, r > 0)?;
            let cone = face.normal_cone_at(&geo, budgets.cone())?;
            let fd = node_frame(face, &geo)?;
            let terms = inner_terms(&fd, &cone, r, n, budgets.mc_samples, seed, stream_id(&face.vertex_subset, idx))?;
            let scale = w * geo.sqrt_det;
            Ok(terms.iter().map(|q| (scale * q.value, (scale * q.std_error).powi(2))).collect())
        })
        .collect();
    let mut acc: Vec<(f64, f64)> = Vec::new();
    for node in per_node {
        let node = node?;
        if acc.is_empty() {
            acc = vec![(0.0, 0.0); node.len()];
        }
        for (a, b) in acc.iter_mut().zip(node) {
            a.0 += b.0;
            a.1 += b.1;
        }
    }
    Ok(acc)
}

/// `G` of one face of an `n`-simplex in `n`-dimensional space.
pub fn face_contribution(
    s: &GeodesicSimplex,
    face: &Face<'_>,
    budgets: &Budgets,
    seed: u64,
) -> Result<FaceContribution> {
    let n = s.chart().dim();
    if s.dim_k() != n {
        return Err(GeomError::InvalidInput(format!(
            "face contributions need a top-dimensional simplex ({}-simplex in dimension {n})",
            s.dim_k()
        )));
    }
    let r = face.r();
    if r == n {
        if n % 2 == 1 {
            return Ok(FaceContribution {
                r,
                face: face.vertex_subset.clone(),
                value: 0.0,
                std_error: 0.0,
                quad_error: Some(0.0),
                breakdown: vec![(n / 2, 0.0)],
            });
        }
        let q = integrate_collapsed(
            |u| {
                let geo = face.geometry(u, false)?;
                let c = curvature_at(s.chart(), &geo.point)?;
                Ok(psi_intrinsic(&c.riemann, c.det_g) * geo.sqrt_det)
            },
            r,
            budgets.order,
        )?;
        return Ok(FaceContribution {
            r,
            face: face.vertex_subset.clone(),
            value: q.value,
            std_error: 0.0,
            quad_error: Some(q.std_error),
            breakdown: vec![(n / 2, q.value)],
        });
    }
    let hi = outer_pass(face, budgets, seed, budgets.order)?;
    let value: f64 = hi.iter().map(|t| t.0).sum();
    let var: f64 = hi.iter().map(|t| t.1).sum();
    let stochastic = n - r >= 3;
    let quad_error = if stochastic || r == 0 {
        None
    } else {
        let lo = outer_pass(face, budgets, seed, budgets.order.max(3) - 2)?;
        Some((value - lo.iter().map(|t| t.0).sum::<f64>()).abs())
    };
    let breakdown = if stochastic { vec![(0, value)] } else { hi.iter().enumerate().map(|(f, t)| (f, t.0)).collect() };
    Ok(FaceContribution { r, face: face.vertex_subset.clone(), value, std_error: var.sqrt(), quad_error, breakdown })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GBReport {
    pub n: usize,
    /// `G(M[r])` for `r = 0..=n`.
    pub strata: Vec<f64>,
    pub strata_std_error: Vec<f64>,
    pub total: f64,
    /// `total - 1`.
    pub residual: f64,
    pub std_error: f64,
    /// Largest order-refinement change over deterministic faces.
    pub quad_error: f64,
    pub faces: Vec<FaceContribution>,
}

impl GBReport {
    /// Interior, facet, ..., vertex terms (strata in decreasing dimension).
    pub fn budget(&self) -> Vec<f64> {
        self.strata.iter().rev().copied().collect()
    }

    /// `|residual| ≤ max(floor, 3·std_error)`.
    pub fn within(&self, floor: f64) -> bool {
        self.residual.abs() <= floor.max(3.0 * self.std_error)
    }
}

/// All face contributions of an `n`-simplex, assembled by stratum.
pub fn verify_identity(s: &GeodesicSimplex, budgets: &Budgets, seed: u64) -> Result<GBReport> {
    let n = s.chart().dim();
    let faces: Vec<Face<'_>> = (0..=n).flat_map(|r| s.faces(r)).collect();
    let contribs: Vec<Result<FaceContribution>> =
        faces.par_iter().map(|f| face_contribution(s, f, budgets, seed)).collect();
    let mut strata = vec![0.0; n + 1];
    let mut var = vec![0.0; n + 1];
    let mut out = Vec::with_capacity(contribs.len());
    let mut quad_error = 0.0f64;
    for c in contribs {
        let c = c?;
        strata[c.r] += c.value;
        var[c.r] += c.std_error * c.std_error;
        if let Some(q) = c.quad_error {
            quad_error = quad_error.max(q);
        }
        out.push(c);
    }
    let total: f64 = strata.iter().sum();
    let std_error = var.iter().sum::<f64>().sqrt();
    Ok(GBReport {
        n,
        strata,
        strata_std_error: var.iter().map(|v| v.sqrt()).collect(),
        total,
        residual: total - 1.0,
        std_error,
        quad_error,
        faces: out,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleDefect {
    pub curv_integral: f64,
    pub exterior_angles: [f64; 3],
    pub residual: f64,
    pub quad_error: f64,
}

/// `∫K dv + Σ α_i - 2π` for a geodesic triangle in a surface chart, with
/// exterior angles from the logarithm map at each vertex.
pub fn angle_defect_2d(s: &GeodesicSimplex, order: usize) -> Result<AngleDefect> {
    let m = s.chart();
    if m.dim() != 2 || s.dim_k() != 2 {
        return Err(GeomError::InvalidInput("angle defect needs a triangle in a surface chart".into()));
    }
    let face = s.face(&[0, 1, 2])?;
    let q = integrate_collapsed(
        |u| {
            let geo = face.geometry(u, false)?;
            let c = curvature_at(m, &geo.point)?;
            Ok(c.riemann.get(0, 1, 0, 1) / c.det_g * geo.sqrt_det)
        },
        2,
        order,
    )?;
    let v = s.vertices();
    let mut ext = [0.0; 3];
    for i in 0..3 {
        let a = log_map(m, &v[i], &v[(i + 1) % 3])?;
        let b = log_map(m, &v[i], &v[(i + 2) % 3])?;
        let g = m.metric_matrix(&v[i]);
        let cos = inner_g(&g, &a, &b) / (inner_g(&g, &a, &a) * inner_g(&g, &b, &b)).sqrt();
        ext[i] = PI - cos.clamp(-1.0, 1.0).acos();
    }
    let residual = q.value + ext.iter().sum::<f64>() - 2.0 * PI;
    Ok(AngleDefect { curv_integral: q.value, exterior_angles: ext, residual, quad_error: q.std_error })
}

/// Closed four-manifolds with constant integrand and known volume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ClosedModel {
    RoundSphere4 {
        radius: f64,
    },
    FlatTorus4 {
        volume: f64,
    },
    /// Product of two closed surfaces of constant curvature with the given areas.
    SurfaceProduct {
        curvature: [f64; 2],
        area: [f64; 2],
    },
}

impl ClosedModel {
    /// Genus-`g` hyperbolic surface (`K = -1`) squared.
    pub fn hyperbolic_surface_square(genus: usize) -> Self {
        let area = 2.0 * PI * (2.0 * genus as f64 - 2.0);
        ClosedModel::SurfaceProduct { curvature: [-1.0, -1.0], area: [area, area] }
    }

    /// Recognise a model chart; flat and product charts need their volume or areas.
    pub fn from_chart(m: &ChartedMetric, sizes: &[f64]) -> Result<Self> {
        let surface = |c: &ChartedMetric| -> Option<f64> {
            if c.dim() != 2 {
                return None;
            }
            match c.kind() {
                MetricKind::Euclidean => Some(0.0),
                MetricKind::HyperbolicBall { curvature } => Some(*curvature),
                MetricKind::SpherePolar { radius } => Some(1.0 / (radius * radius)),
                MetricKind::Product(..) => None,
            }
        };
        match (m.kind(), m.dim()) {
            (MetricKind::SpherePolar { radius }, 4) => Ok(ClosedModel::RoundSphere4 { radius: *radius }),
            (MetricKind::Euclidean, 4) => Ok(ClosedModel::FlatTorus4 { volume: sizes.first().copied().unwrap_or(1.0) }),
            (MetricKind::Product(a, b), 4) => match (surface(a), surface(b), sizes) {
                (Some(ka), Some(kb), [aa, ab]) => {
                    Ok(ClosedModel::SurfaceProduct { curvature: [ka, kb], area: [*aa, *ab] })
                }
                _ => Err(GeomError::UnsupportedModel(
                    "surface products need two constant-curvature surface factors and both areas".into(),
                )),
            },
            _ => Err(GeomError::UnsupportedModel(format!("{:?} in dimension {}", m.kind(), m.dim()))),
        }
    }

    pub fn chart(&self) -> ChartedMetric {
        let surface = |k: f64| {
            if k < 0.0 {
                ChartedMetric::hyperbolic(2, k)
            } else if k > 0.0 {
                ChartedMetric::sphere(2, 1.0 / k.sqrt())
            } else {
                ChartedMetric::euclidean(2)
            }
        };
        match self {
            ClosedModel::RoundSphere4 { radius } => ChartedMetric::sphere(4, *radius),
            ClosedModel::FlatTorus4 { .. } => ChartedMetric::euclidean(4),
            ClosedModel::SurfaceProduct { curvature, .. } => {
                ChartedMetric::product(surface(curvature[0]), surface(curvature[1]))
            }
        }
    }

    pub fn volume(&self) -> f64 {
        match self {
            ClosedModel::RoundSphere4 { radius } => 8.0 * PI * PI / 3.0 * radius.powi(4),
            ClosedModel::FlatTorus4 { volume } => *volume,
            ClosedModel::SurfaceProduct { area, .. } => area[0] * area[1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EulerCheck {
    pub psi4: f64,
    pub volume: f64,
    pub chi_estimate: f64,
}

/// `χ = Ψ_4 · vol` for a closed model whose integrand is constant.
pub fn euler_check_model(model: &ClosedModel, how: Differentiation) -> Result<EulerCheck> {
    let chart = model.chart();
    let x = chart.interior_sample(&[0.37, 0.61, 0.45, 0.52]);
    let c = curvature_at_with(&chart, &x, how)?;
    let psi4 = psi_intrinsic(&c.riemann, c.det_g);
    let volume = model.volume();
    Ok(EulerCheck { psi4, volume, chi_estimate: psi4 * volume })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoFaceBudget {
    pub face: Vec<usize>,
    /// `∫∫ (-Ψ_2)` over the face and its dual arcs.
    pub value: f64,
    /// `∫ (-K_face) dv / 2π`, the full-circle comparison value.
    pub full_circle: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremBudget {
    pub vertex_term: f64,
    pub vertex_std_error: f64,
    pub edge_term: f64,
    pub edge_std_error: f64,
    pub two_face_term: f64,
    pub two_faces: Vec<TwoFaceBudget>,
    pub bound_constant: f64,
}

impl TheoremBudget {
    /// Range violations beyond `eps`, as human-readable messages.
    pub fn violations(&self, eps: f64) -> Vec<String> {
        let mut out = Vec::new();
        if !(-eps..=5.0 + eps).contains(&self.vertex_term) {
            out.push(format!("vertex term {} outside [0, 5]", self.vertex_term));
        }
        if self.edge_term > eps {
            out.push(format!("edge term {} above {eps}", self.edge_term));
        }
        if !(-eps..=5.0 + eps).contains(&self.two_face_term) {
            out.push(format!("2-face term {} outside [0, 5]", self.two_face_term));
        }
        for f in &self.two_faces {
            if f.value > 0.5 + eps {
                out.push(format!("2-face {:?} value {} above 1/2", f.face, f.value));
            }
        }
        if self.bound_constant > 11.0 + eps {
            out.push(format!("bound constant {} above 11", self.bound_constant));
        }
        out
    }
}

/// The vertex, edge and 2-face terms of a 4-simplex in a nonpositively curved model.
pub fn theorem_budget(s: &GeodesicSimplex, budgets: &Budgets, seed: u64) -> Result<TheoremBudget> {
    let m = s.chart();
    if m.max_sectional_curvature() > 0.0 {
        return Err(GeomError::PositiveCurvatureModel);
    }
    if m.dim() != 4 || s.dim_k() != 4 {
        return Err(GeomError::InvalidInput("the budget is defined for 4-simplices in dimension 4".into()));
    }
    let faces: Vec<Face<'_>> = (0..=2).flat_map(|r| s.faces(r)).collect();
    let contribs: Vec<Result<FaceContribution>> =
        faces.par_iter().map(|f| face_contribution(s, f, budgets, seed)).collect();
    let (mut vt, mut vv, mut et, mut ev, mut tt) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let mut two_faces = Vec::new();
    for (c, face) in contribs.into_iter().zip(&faces) {
        let c = c?;
        match c.r {
            0 => {
                vt += c.value;
                vv += c.std_error * c.std_error;
            }
            1 => {
                et += c.value.abs();
                ev += c.std_error * c.std_error;
            }
            _ => {
                tt -= c.value;
                let full = integrate_collapsed(
                    |u| {
                        let geo = face.geometry(u, true)?;
                        let fd = node_frame(face, &geo)?;
                        Ok(-fd.gauss_curvature() * geo.sqrt_det)
                    },
                    2,
                    budgets.order,
                )?;
                two_faces.push(TwoFaceBudget {
                    face: c.face.clone(),
                    value: -c.value,
                    full_circle: full.value / (2.0 * PI),
                });
            }
        }
    }
    Ok(TheoremBudget {
        vertex_term: vt,
        vertex_std_error: vv.sqrt(),
        edge_term: et,
        edge_std_error: ev.sqrt(),
        two_face_term: tt,
        two_faces,
        bound_constant: 1.0 + vt + tt,
    })
}

/// Spherical volume of a vertex dual cone divided by `ω_{n-1}`; the flat
/// identity says these sum to one over the vertices.
pub fn vertex_dual_fraction(s: &GeodesicSimplex, vertex: usize, budgets: &Budgets, seed: u64) -> Result<QuadResult> {
    let n = s.chart().dim();
    let face = s.face(&[vertex])?;
    let geo = face.geometry(&[], false)?;
    let cone = face.normal_cone_at(&geo, budgets.cone())?;
    let mut rng = mc_rng(seed, stream_id(&[vertex], 0));
    let q = integrate_dual_cone(|_| 1.0, &cone, budgets.mc_samples, &mut rng);
    let w = sphere_area(n - 1);
    Ok(QuadResult { value: q.value / w, std_error: q.std_error / w, ..q })
}

/// Extrinsic versus intrinsic `Ψ_r` at one point of a face of codimension two.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalCircleCheck {
    pub face: Vec<usize>,
    pub u: Vec<f64>,
    /// `∫_{S(x)} Ψ_r(x, ξ) dξ` over the full unit normal circle.
    pub circle: f64,
    /// `Ψ_r` of the induced metric, from its own finite-difference curvature.
    pub intrinsic: f64,
    pub rel_error: f64,
}

/// Compare the normal-circle integral of the extrinsic integrand with the
/// intrinsic integrand of the induced metric at collapsed coordinates `u`.
pub fn normal_circle_check(s: &GeodesicSimplex, face: &[usize], u: &[f64]) -> Result<NormalCircleCheck> {
    let f = s.face(face)?;
    let (r, n) = (f.r(), s.chart().dim());
    if n - r != 2 || r % 2 == 1 {
        return Err(GeomError::InvalidInput(format!(
            "need an even-dimensional face of codimension 2, got r={r} in n={n}"
        )));
    }
    let geo = f.geometry(u, true)?;
    let fd = FrameData::from_geometry(&geo, &curvature_at(s.chart(), &geo.point)?);
    let mut unused = mc_rng(0, 0);
    let psi = |xi: &[f64]| (0..=r / 2).map(|k| psi_extrinsic_rf(&fd, xi, r, k, n).unwrap_or(f64::NAN)).sum::<f64>();
    let circle = integrate_normal_sphere(psi, 2, 0, &mut unused).value;
    let c = curvature_at(&f.induced_metric(), u)?;
    let intrinsic = psi_intrinsic(&c.riemann, c.det_g);
    if !circle.is_finite() || !intrinsic.is_finite() {
        return Err(GeomError::NumericalBreakdown { residual: f64::NAN });
    }
    let rel_error = (circle - intrinsic).abs() / intrinsic.abs().max(f64::MIN_POSITIVE);
    Ok(NormalCircleCheck { face: face.to_vec(), u: u.to_vec(), circle, intrinsic, rel_error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn small() -> Budgets {
        Budgets { order: 6, mc_samples: 20_000, ..Budgets::default() }
    }

    #[test]
    fn flat_triangle_identity() {
        let s =
            GeodesicSimplex::build(&ChartedMetric::euclidean(2), vec![vec![0.0, 0.0], vec![2.0, 0.3], vec![0.4, 1.5]])
                .unwrap();
        let rep = verify_identity(&s, &small(), 1).unwrap();
        // edge normals come from finite-difference frames
        assert!(rep.residual.abs() < 1e-9, "{rep:?}");
        assert_eq!(rep.strata[2], 0.0);
        assert!(rep.strata[1].abs() < 1e-9);
    }

    #[test]
    fn hyperbolic_triangle_identity_and_defect() {
        let m = ChartedMetric::hyperbolic(2, -1.0);
        let s = GeodesicSimplex::build(&m, vec![vec![0.3, 0.1], vec![-0.4, 0.5], vec![0.0, -0.6]]).unwrap();
        let rep = verify_identity(&s, &small(), 1).unwrap();
        assert!(rep.residual.abs() < 1e-6, "{rep:?}");
        let d = angle_defect_2d(&s, 10).unwrap();
        assert!(d.residual.abs() < 1e-6, "{d:?}");
        assert_relative_eq!(rep.strata[2], d.curv_integral / (2.0 * PI), epsilon = 1e-7);
        assert!(rep.strata[2] < 0.0 && rep.strata[2] > -0.5);
    }

    #[test]
    fn sphere_triangle_identity() {
        let m = ChartedMetric::sphere(2, 1.0);
        let s = GeodesicSimplex::build(&m, vec![vec![1.2, 0.1], vec![1.6, 0.5], vec![1.9, -0.2]]).unwrap();
        let rep = verify_identity(&s, &small(), 1).unwrap();
        assert!(rep.residual.abs() < 1e-6, "{rep:?}");
    }

    #[test]
    fn flat_tetrahedron_tiles_the_sphere() {
        let s = GeodesicSimplex::build(
            &ChartedMetric::euclidean(3),
            vec![vec![0.0, 0.0, 0.0], vec![1.0, 0.1, 0.0], vec![0.2, 1.1, 0.1], vec![0.1, 0.3, 0.9]],
        )
        .unwrap();
        let rep = verify_identity(&s, &small(), 4).unwrap();
        assert!(rep.residual.abs() <= 3.0 * rep.std_error + 1e-9, "{rep:?}");
        for r in 1..=3 {
            assert!(rep.strata[r].abs() < 1e-10);
        }
    }

    #[test]
    fn euler_checks() {
        let s4 = euler_check_model(&ClosedModel::RoundSphere4 { radius: 1.0 }, Differentiation::Auto).unwrap();
        assert_relative_eq!(s4.chi_estimate, 2.0, epsilon = 1e-10);
        let t4 = euler_check_model(&ClosedModel::FlatTorus4 { volume: 1.0 }, Differentiation::Auto).unwrap();
        assert_eq!(t4.chi_estimate, 0.0);
        let g2 = euler_check_model(&ClosedModel::hyperbolic_surface_square(2), Differentiation::Auto).unwrap();
        assert_relative_eq!(g2.chi_estimate, 4.0, epsilon = 1e-10);
        let err = ClosedModel::from_chart(&ChartedMetric::hyperbolic(4, -1.0), &[]).unwrap_err();
        assert!(matches!(err, GeomError::UnsupportedModel(_)));
    }

    #[test]
    fn budget_rejects_positive_curvature() {
        let m = ChartedMetric::sphere(4, 1.0);
        let c = [1.4, 1.5, 1.6, 0.3];
        let mut vs = vec![c.to_vec()];
        for i in 0..4 {
            let mut v = c.to_vec();
            v[i] += 0.2;
            vs.push(v);
        }
        let s = GeodesicSimplex::build(&m, vs).unwrap();
        assert_eq!(theorem_budget(&s, &small(), 0).unwrap_err(), GeomError::PositiveCurvatureModel);
    }

    #[test]
    fn normal_circle_matches_induced_curvature() {
        let p = crate::presets::preset("h2xh2-4simplex").unwrap();
        let s = GeodesicSimplex::build(&p.model, p.vertices).unwrap();
        for face in [[0, 1, 2], [1, 3, 4], [0, 2, 4]] {
            let c = normal_circle_check(&s, &face, &[0.4, 0.3]).unwrap();
            assert!(c.rel_error < 1e-4, "{c:?}");
        }
        assert!(normal_circle_check(&s, &[0, 1], &[0.5]).is_err());
    }
}
