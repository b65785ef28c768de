//! Geodesic simplices built by iterated coning, their faces and normal cones.
//!
//! A simplex on `p_0..p_k` is evaluated bottom-up: starting from the first
//! vertex with positive weight, each later vertex `p_j` pulls the current
//! point along the geodesic towards it by `t_j = b_j / (b_0 + … + b_j)`.
//! The `t_j` are the collapsed (Duffy) coordinates of `b`; the restriction
//! to a face is the same recursion on the face's vertices, in the parent's
//! order, so face maps are handled in collapsed coordinates where they are
//! smooth.

use std::collections::{BTreeSet, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{GeomError, Result};
use crate::geodesics::{exp_unchecked, inner_g, log_unchecked};
use crate::metrics::{christoffel, ChartedMetric, MetricField, MetricJet};

/// Smallest singular value of `dσ` at the barycenter, relative to the longest edge.
pub const DEGEN_TOL: f64 = 1e-7;
/// Dual-cone membership slack.
pub const CONE_TOL: f64 = 1e-10;

const H_FIRST: f64 = 1e-5;
const H_SECOND: f64 = 5e-4;
const H_CONE: f64 = 1e-5;

#[derive(Debug, Clone)]
pub struct GeodesicSimplex {
    chart: ChartedMetric,
    vertices: Vec<Vec<f64>>,
    scale: f64,
    min_singular: f64,
}

impl GeodesicSimplex {
    pub fn build(m: &ChartedMetric, vertices: Vec<Vec<f64>>) -> Result<Self> {
        Self::build_with_tol(m, vertices, DEGEN_TOL)
    }

    pub fn build_with_tol(m: &ChartedMetric, vertices: Vec<Vec<f64>>, degen_tol: f64) -> Result<Self> {
        if vertices.is_empty() {
            return Err(GeomError::InvalidInput("a simplex needs at least one vertex".into()));
        }
        for p in &vertices {
            m.check_point(p)?;
        }
        let k = vertices.len() - 1;
        let mut scale = 0.0f64;
        for i in 0..=k {
            for j in i + 1..=k {
                let v = log_unchecked(m, &vertices[i], &vertices[j])?;
                scale = scale.max(inner_g(&m.metric_matrix(&vertices[i]), &v, &v).sqrt());
            }
        }
        let mut s = Self { chart: m.clone(), vertices, scale, min_singular: f64::INFINITY };
        if k == 0 {
            return Ok(s);
        }
        if k > m.dim() || scale == 0.0 {
            return Err(GeomError::DegenerateSimplex(0.0));
        }
        let bary = vec![1.0 / (k + 1) as f64; k + 1];
        let d = s.differential_raw(&bary)?;
        let x = s.eval(&bary)?;
        let sv = smallest_singular(&m.metric_matrix(&x), &d) / scale;
        if !(sv >= degen_tol) {
            return Err(GeomError::DegenerateSimplex(sv));
        }
        s.min_singular = sv;
        Ok(s)
    }

    pub fn chart(&self) -> &ChartedMetric {
        &self.chart
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn dim_k(&self) -> usize {
        self.vertices.len() - 1
    }

    /// Relative smallest singular value recorded at build time.
    pub fn nondegeneracy(&self) -> f64 {
        self.min_singular
    }

    /// Longest edge length.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn eval(&self, b: &[f64]) -> Result<Vec<f64>> {
        let k = self.dim_k();
        if b.len() != k + 1 {
            return Err(GeomError::DimensionMismatch { expected: k + 1, got: b.len() });
        }
        let mut acc = 0.0;
        let mut q: Option<Vec<f64>> = None;
        for (j, bj) in b.iter().enumerate() {
            acc += bj;
            match q {
                None => {
                    if *bj > 0.0 {
                        q = Some(self.vertices[j].clone());
                    }
                }
                Some(ref cur) => {
                    let t = bj / acc;
                    if t != 0.0 {
                        q = Some(self.pull(cur, j, t)?);
                    }
                }
            }
        }
        q.ok_or_else(|| GeomError::InvalidInput(format!("barycentric weights {b:?} have no positive entry")))
    }

    fn pull(&self, q: &[f64], j: usize, t: f64) -> Result<Vec<f64>> {
        if t == 1.0 {
            return Ok(self.vertices[j].clone());
        }
        // step from the nearer end: long exponential steps lose precision
        // near the boundary of a ball chart
        let (from, to, s) = if t > 0.5 { (&self.vertices[j][..], q, 1.0 - t) } else { (q, &self.vertices[j][..], t) };
        let v = log_unchecked(&self.chart, from, to)?;
        let step: Vec<f64> = v.iter().map(|a| a * s).collect();
        exp_unchecked(&self.chart, from, &step)
    }

    /// The coning recursion over `idx` with explicit collapsed coordinates.
    pub fn eval_collapsed(&self, idx: &[usize], u: &[f64]) -> Result<Vec<f64>> {
        if u.len() + 1 != idx.len() {
            return Err(GeomError::DimensionMismatch { expected: idx.len() - 1, got: u.len() });
        }
        let mut q = self.vertices[idx[0]].clone();
        for (t, &j) in u.iter().zip(&idx[1..]) {
            if *t != 0.0 {
                q = self.pull(&q, j, *t)?;
            }
        }
        Ok(q)
    }

    fn differential_raw(&self, b: &[f64]) -> Result<DMatrix<f64>> {
        let k = self.dim_k();
        let n = self.chart.dim();
        let mut d = DMatrix::zeros(n, k);
        for j in 1..=k {
            let mut bp = b.to_vec();
            let mut bm = b.to_vec();
            bp[j] += H_FIRST;
            bp[0] -= H_FIRST;
            bm[j] -= H_FIRST;
            bm[0] += H_FIRST;
            let xp = self.eval(&bp)?;
            let xm = self.eval(&bm)?;
            for i in 0..n {
                d[(i, j - 1)] = (xp[i] - xm[i]) / (2.0 * H_FIRST);
            }
        }
        Ok(d)
    }

    /// `dσ` along the edge directions `e_j - e_0`, `j = 1..k`.
    pub fn differential(&self, b: &[f64]) -> Result<DMatrix<f64>> {
        let d = self.differential_raw(b)?;
        let x = self.eval(b)?;
        if smallest_singular(&self.chart.metric_matrix(&x), &d) < DEGEN_TOL * self.scale {
            return Err(GeomError::DegenerateAt(b.to_vec()));
        }
        Ok(d)
    }

    pub fn face(&self, vertex_subset: &[usize]) -> Result<Face<'_>> {
        let k = self.dim_k();
        let ok = !vertex_subset.is_empty()
            && vertex_subset.windows(2).all(|w| w[0] < w[1])
            && vertex_subset.iter().all(|&i| i <= k);
        if !ok {
            return Err(GeomError::InvalidInput(format!(
                "face {vertex_subset:?} is not an increasing subset of 0..={k}"
            )));
        }
        let mut perm: Vec<usize> = (0..=k).filter(|i| !vertex_subset.contains(i)).collect();
        perm.extend_from_slice(vertex_subset);
        Ok(Face { parent: self, vertex_subset: vertex_subset.to_vec(), orientation: parity(&perm) })
    }

    /// All faces of dimension `r`, in lexicographic order of their vertex sets.
    pub fn faces(&self, r: usize) -> Vec<Face<'_>> {
        combinations(self.dim_k() + 1, r + 1).into_iter().map(|s| self.face(&s).expect("valid subset")).collect()
    }

    /// Maximum coordinate distance between the restriction of `σ` to a face
    /// and the simplex re-coned on the face's vertices, over a lattice of
    /// barycentric points of the face.
    pub fn face_coning_deviation(&self, vertex_subset: &[usize], lattice: usize) -> Result<f64> {
        let face = self.face(vertex_subset)?;
        let sub: Vec<Vec<f64>> = vertex_subset.iter().map(|&i| self.vertices[i].clone()).collect();
        let recone = GeodesicSimplex { chart: self.chart.clone(), vertices: sub, scale: self.scale, min_singular: 0.0 };
        let mut worst = 0.0f64;
        for w in simplex_lattice(vertex_subset.len(), lattice.max(1)) {
            let a = self.eval(&face.embed(&w))?;
            let b = recone.eval(&w)?;
            worst = worst.max(a.iter().zip(&b).fold(0.0f64, |m, (p, q)| m.max((p - q).abs())));
        }
        Ok(worst)
    }
}

/// Smallest singular value of `d` measured in the metric `g`.
fn smallest_singular(g: &DMatrix<f64>, d: &DMatrix<f64>) -> f64 {
    let gamma = d.transpose() * g * d;
    let ev = gamma.symmetric_eigenvalues();
    ev.iter().fold(f64::INFINITY, |m, v| m.min(*v)).max(0.0).sqrt()
}

fn parity(perm: &[usize]) -> i8 {
    let mut inv = 0;
    for i in 0..perm.len() {
        for j in i + 1..perm.len() {
            if perm[i] > perm[j] {
                inv += 1;
            }
        }
    }
    if inv % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Increasing `k`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Barycentric points `n/m` with integer numerators, on the simplex with `len` vertices.
pub fn simplex_lattice(len: usize, m: usize) -> Vec<Vec<f64>> {
    fn rec(left: usize, slots: usize, m: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if slots == 1 {
            cur.push(left);
            out.push(cur.iter().map(|&c| c as f64 / m as f64).collect());
            cur.pop();
            return;
        }
        for c in (0..=left).rev() {
            cur.push(c);
            rec(left - c, slots - 1, m, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(m, len, m, &mut Vec::new(), &mut out);
    out
}

/// The lattice `simplex_lattice(len, m)` with the Freudenthal triangulation
/// of the simplex it subdivides, every face listed once.
#[derive(Debug)]
pub struct LatticeComplex {
    pub points: Vec<Vec<f64>>,
    /// `cells[d]`: the `d`-simplices as point indices, `d ≥ 1`.
    pub cells: Vec<Vec<Vec<u32>>>,
    /// Per point, `(other vertices, sign)` of each cell whose lowest index it is.
    star: Vec<Vec<(Vec<u32>, i8)>>,
}

impl LatticeComplex {
    fn build(len: usize, m: usize) -> Self {
        let d = len - 1;
        // staircase coordinates m ≥ y_1 ≥ … ≥ y_d ≥ 0; barycentric weights are the gaps
        let to_bary = |y: &[usize]| -> Vec<usize> {
            let mut w = Vec::with_capacity(len);
            let mut prev = m;
            for &v in y {
                w.push(prev - v);
                prev = v;
            }
            w.push(prev);
            w
        };
        let points = simplex_lattice(len, m);
        let index: HashMap<Vec<usize>, u32> = points
            .iter()
            .enumerate()
            .map(|(i, p)| (p.iter().map(|x| (x * m as f64).round() as usize).collect(), i as u32))
            .collect();
        let inside = |y: &[usize]| y.windows(2).all(|p| p[0] >= p[1]) && y.first().is_none_or(|&v| v <= m);
        let mut perms: Vec<Vec<usize>> = vec![vec![]];
        for k in 0..d {
            perms = perms
                .into_iter()
                .flat_map(|p| {
                    (0..=k).map(move |i| {
                        let mut q = p.clone();
                        q.insert(i, k);
                        q
                    })
                })
                .collect();
        }
        let mut faces: Vec<BTreeSet<Vec<u32>>> = vec![BTreeSet::new(); d + 1];
        let mut corner = vec![0usize; d];
        loop {
            for p in &perms {
                let mut y = corner.clone();
                let mut verts = vec![y.clone()];
                for &axis in p {
                    y[axis] += 1;
                    verts.push(y.clone());
                }
                if verts.iter().all(|v| inside(v)) {
                    let ids: Vec<u32> = verts.iter().map(|v| index[&to_bary(v)]).collect();
                    for mask in 1u32..(1 << ids.len()) {
                        let mut f: Vec<u32> = (0..ids.len()).filter(|i| mask >> i & 1 == 1).map(|i| ids[i]).collect();
                        if f.len() >= 2 {
                            f.sort_unstable();
                            faces[f.len() - 1].insert(f);
                        }
                    }
                }
            }
            // next cube corner in {0..m-1}^d
            let mut i = 0;
            while i < d {
                corner[i] += 1;
                if corner[i] < m {
                    break;
                }
                corner[i] = 0;
                i += 1;
            }
            if i == d {
                break;
            }
        }
        let cells: Vec<Vec<Vec<u32>>> = faces.into_iter().map(|s| s.into_iter().collect()).collect();
        let mut star = vec![Vec::new(); points.len()];
        for (dim, cs) in cells.iter().enumerate() {
            for c in cs {
                star[c[0] as usize].push((c[1..].to_vec(), if dim % 2 == 0 { 1 } else { -1 }));
            }
        }
        Self { points, cells, star }
    }

    /// Euler characteristic of the full subcomplex on the flagged points.
    pub fn euler_characteristic(&self, on: &[bool]) -> i64 {
        let mut chi = 0i64;
        for (v, cells) in self.star.iter().enumerate() {
            if !on[v] {
                continue;
            }
            chi += 1;
            for (rest, sign) in cells {
                if rest.iter().all(|&i| on[i as usize]) {
                    chi += *sign as i64;
                }
            }
        }
        chi
    }
}

/// Shared, lazily built [`LatticeComplex`] for `(len, m)`.
pub fn lattice_complex(len: usize, m: usize) -> Arc<LatticeComplex> {
    type Cache = Mutex<HashMap<(usize, usize), Arc<LatticeComplex>>>;
    static CACHE: OnceLock<Cache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("lattice cache poisoned");
    guard.entry((len, m)).or_insert_with(|| Arc::new(LatticeComplex::build(len, m))).clone()
}

/// Map collapsed coordinates `u ∈ [0,1]^r` to barycentric coordinates on `Δ^r`.
pub fn collapsed_to_barycentric(u: &[f64]) -> Vec<f64> {
    let r = u.len();
    let mut b = vec![0.0; r + 1];
    let mut rest = 1.0;
    for m in (1..=r).rev() {
        b[m] = u[m - 1] * rest;
        rest *= 1.0 - u[m - 1];
    }
    b[0] = rest;
    b
}

pub fn barycentric_to_collapsed(b: &[f64]) -> Vec<f64> {
    let mut acc = b[0];
    let mut u = Vec::with_capacity(b.len() - 1);
    for bj in &b[1..] {
        acc += bj;
        u.push(if acc > 0.0 { bj / acc } else { 0.0 });
    }
    u
}

/// A face of a geodesic simplex: the restriction of the parent map to the
/// sub-simplex spanned by `vertex_subset`.
#[derive(Debug, Clone)]
pub struct Face<'a> {
    pub parent: &'a GeodesicSimplex,
    pub vertex_subset: Vec<usize>,
    /// Sign of the permutation `(complement, subset)`; `(-1)^i` for the facet opposite `p_i`.
    pub orientation: i8,
}

/// Geometry of a face at one point, in collapsed coordinates `u`.
#[derive(Debug, Clone)]
pub struct FaceGeometry {
    pub u: Vec<f64>,
    /// Barycentric coordinates in the parent simplex.
    pub base_point: Vec<f64>,
    pub point: Vec<f64>,
    pub metric: DMatrix<f64>,
    /// `∂σ/∂u`, one column per collapsed coordinate.
    pub tangent: DMatrix<f64>,
    pub induced: DMatrix<f64>,
    pub sqrt_det: f64,
    /// g-orthonormal frame of the face tangent space (coordinate vectors as columns).
    pub frame: DMatrix<f64>,
    /// g-orthonormal frame of the normal space.
    pub normals: DMatrix<f64>,
    /// `Λ^a` in the orthonormal tangent frame, one per normal frame vector.
    /// Empty unless requested.
    pub lambda: Vec<DMatrix<f64>>,
}

impl FaceGeometry {
    pub fn codim(&self) -> usize {
        self.normals.ncols()
    }

    /// `Λ(ξ)` for `ξ` given in normal-frame coordinates.
    pub fn lambda_at(&self, xi: &[f64]) -> DMatrix<f64> {
        let r = self.frame.ncols();
        let mut out = DMatrix::zeros(r, r);
        for (a, l) in self.lambda.iter().enumerate() {
            out += l * xi[a];
        }
        out
    }

    /// Normal-frame coordinates of a coordinate-space vector.
    pub fn to_normal_coords(&self, v: &[f64]) -> Vec<f64> {
        (0..self.codim())
            .map(|a| {
                let col: Vec<f64> = self.normals.column(a).iter().copied().collect();
                inner_g(&self.metric, &col, v)
            })
            .collect()
    }

    pub fn from_normal_coords(&self, xi: &[f64]) -> Vec<f64> {
        let v = &self.normals * DVector::from_column_slice(xi);
        v.iter().copied().collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ConeOptions {
    /// Lattice subdivisions of the complementary simplex used for extra
    /// constraint rays when the tangent cone is not polyhedral (codim ≥ 3).
    pub lattice: usize,
    /// Same, for codimension two, where the dual arc is computed directly.
    pub arc_lattice: usize,
}

impl Default for ConeOptions {
    fn default() -> Self {
        Self { lattice: 12, arc_lattice: 64 }
    }
}

/// Inward tangent directions transverse to a face at one point and the
/// dual cone they cut out of the unit normal sphere.
#[derive(Debug, Clone)]
pub struct NormalConeSample {
    pub base_point: Vec<f64>,
    pub point: Vec<f64>,
    pub face_tangent_frame: DMatrix<f64>,
    pub normal_frame: DMatrix<f64>,
    /// Unit inward directions towards each vertex off the face, in normal-frame coordinates.
    pub cone_generators: Vec<DVector<f64>>,
    /// Generators plus the extra rays of a curved tangent cone.
    pub constraint_rays: Vec<DVector<f64>>,
    pub cone_tol: f64,
    /// For a curved cone, the triangulated complementary simplex whose
    /// lattice points map to `constraint_rays` (same order).
    pub link: Option<Arc<LatticeComplex>>,
}

impl NormalConeSample {
    pub fn codim(&self) -> usize {
        self.normal_frame.ncols()
    }

    /// `ξ ∈ N(x)*` for a unit `ξ` in normal-frame coordinates.
    pub fn in_dual(&self, xi: &[f64]) -> bool {
        self.constraint_rays.iter().all(|w| w.iter().zip(xi).map(|(a, b)| a * b).sum::<f64>() >= -self.cone_tol)
    }

    /// Weight of `ξ` in the dual-cone integral.
    ///
    /// For a polyhedral cone this is the membership indicator. A curved
    /// cone need not be convex; there the weight is the local index
    /// `1 - χ({w : ⟨ξ, D(w)⟩ < 0})` over the link, which equals the
    /// indicator of the polar of the convex hull except where the violating
    /// part of the link is disconnected.
    pub fn dual_weight(&self, xi: &[f64]) -> f64 {
        let Some(link) = &self.link else {
            return if self.in_dual(xi) { 1.0 } else { 0.0 };
        };
        let bad: Vec<bool> = self
            .constraint_rays
            .iter()
            .map(|w| w.iter().zip(xi).map(|(a, b)| a * b).sum::<f64>() < -self.cone_tol)
            .collect();
        let count = bad.iter().filter(|b| **b).count();
        if count == 0 {
            return 1.0;
        }
        if count == bad.len() {
            return 0.0;
        }
        1.0 - link.euler_characteristic(&bad) as f64
    }

    /// Codimension one: the unit inward normal.
    pub fn inward_normal(&self) -> Option<f64> {
        (self.codim() == 1).then(|| self.cone_generators[0][0].signum())
    }

    /// Codimension two: the dual arc `[start, end]` as angles in the normal
    /// frame, or `None` when the dual cone is empty.
    pub fn dual_arc(&self) -> Option<(f64, f64)> {
        if self.codim() != 2 {
            return None;
        }
        let base = self.cone_generators[0][1].atan2(self.cone_generators[0][0]);
        let mut lo = 0.0f64;
        let mut hi = 0.0f64;
        for w in &self.constraint_rays {
            let mut a = w[1].atan2(w[0]) - base;
            a = (a + std::f64::consts::PI).rem_euclid(2.0 * std::f64::consts::PI) - std::f64::consts::PI;
            lo = lo.min(a);
            hi = hi.max(a);
        }
        let half = std::f64::consts::FRAC_PI_2;
        let (start, end) = (base + hi - half, base + lo + half);
        (end >= start).then_some((start, end))
    }
}

impl<'a> Face<'a> {
    pub fn r(&self) -> usize {
        self.vertex_subset.len() - 1
    }

    /// Parent barycentric coordinates of a face-barycentric point.
    pub fn embed(&self, w: &[f64]) -> Vec<f64> {
        let mut b = vec![0.0; self.parent.dim_k() + 1];
        for (i, &j) in self.vertex_subset.iter().enumerate() {
            b[j] = w[i];
        }
        b
    }

    pub fn point(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.parent.eval_collapsed(&self.vertex_subset, u)
    }

    fn tangent_at(&self, u: &[f64]) -> Result<DMatrix<f64>> {
        let r = self.r();
        let n = self.parent.chart.dim();
        let mut t = DMatrix::zeros(n, r);
        for i in 0..r {
            let mut up = u.to_vec();
            let mut um = u.to_vec();
            up[i] += H_FIRST;
            um[i] -= H_FIRST;
            let xp = self.point(&up)?;
            let xm = self.point(&um)?;
            for c in 0..n {
                t[(c, i)] = (xp[c] - xm[c]) / (2.0 * H_FIRST);
            }
        }
        Ok(t)
    }

    /// Frames, induced metric and (optionally) second fundamental forms at `u`.
    pub fn geometry(&self, u: &[f64], with_lambda: bool) -> Result<FaceGeometry> {
        let r = self.r();
        let chart = &self.parent.chart;
        let n = chart.dim();
        let base_point = self.embed(&collapsed_to_barycentric(u));
        let x = self.point(u)?;
        let g = chart.metric_matrix(&x);
        let tangent = self.tangent_at(u)?;
        let induced = tangent.transpose() * &g * &tangent;
        let (frame, sqrt_det, e) = if r == 0 {
            (DMatrix::zeros(n, 0), 1.0, DMatrix::zeros(0, 0))
        } else {
            // QR of Cᵀ T with g = C Cᵀ: γ = RᵀR without squaring the
            // conditioning of thin faces
            let c = g.clone().cholesky().ok_or_else(|| GeomError::DegenerateAt(base_point.clone()))?.l();
            let mut rm = (c.transpose() * &tangent).qr().r();
            for i in 0..r {
                if rm[(i, i)] < 0.0 {
                    let mut row = rm.row_mut(i);
                    row *= -1.0;
                }
            }
            let sqrt_det: f64 = rm.diagonal().iter().product();
            if !(sqrt_det > 0.0 && sqrt_det.is_finite()) {
                return Err(GeomError::DegenerateAt(base_point));
            }
            let e = rm.try_inverse().ok_or_else(|| GeomError::DegenerateAt(base_point.clone()))?;
            (&tangent * &e, sqrt_det, e)
        };
        let normals = complete_frame(&g, &frame);
        let mut lambda = Vec::new();
        if with_lambda && r > 0 && normals.ncols() > 0 {
            let gam = christoffel(chart, &x)?;
            let h = H_SECOND;
            let x0 = &x;
            let mut second = vec![vec![vec![0.0; n]; r]; r];
            for i in 0..r {
                let mut up = u.to_vec();
                let mut um = u.to_vec();
                up[i] += h;
                um[i] -= h;
                let (xp, xm) = (self.point(&up)?, self.point(&um)?);
                second[i][i] = (0..n).map(|c| (xp[c] - 2.0 * x0[c] + xm[c]) / (h * h)).collect();
                for j in 0..i {
                    let corner = |si: f64, sj: f64| {
                        let mut w = u.to_vec();
                        w[i] += si * h;
                        w[j] += sj * h;
                        self.point(&w)
                    };
                    let (pp, pm, mp, mm) =
                        (corner(1.0, 1.0)?, corner(1.0, -1.0)?, corner(-1.0, 1.0)?, corner(-1.0, -1.0)?);
                    let v: Vec<f64> = (0..n).map(|c| (pp[c] - pm[c] - mp[c] + mm[c]) / (4.0 * h * h)).collect();
                    second[i][j] = v.clone();
                    second[j][i] = v;
                }
            }
            let cols: Vec<Vec<f64>> = (0..r).map(|i| tangent.column(i).iter().copied().collect()).collect();
            for a in 0..normals.ncols() {
                let nu: Vec<f64> = normals.column(a).iter().copied().collect();
                let mut l = DMatrix::zeros(r, r);
                for i in 0..r {
                    for j in 0..=i {
                        let conn = gam.contract(&cols[i], &cols[j]);
                        let acc: Vec<f64> = (0..n).map(|c| second[i][j][c] + conn[c]).collect();
                        let v = inner_g(&g, &acc, &nu);
                        l[(i, j)] = v;
                        l[(j, i)] = v;
                    }
                }
                lambda.push(e.transpose() * l * &e);
            }
        }
        Ok(FaceGeometry {
            u: u.to_vec(),
            base_point,
            point: x,
            metric: g,
            tangent,
            induced,
            sqrt_det,
            frame,
            normals,
            lambda,
        })
    }

    /// `Λ(ξ)` in the orthonormal tangent frame for a coordinate-space normal `ξ`.
    pub fn second_fundamental_form(&self, u: &[f64], xi: &[f64]) -> Result<DMatrix<f64>> {
        let geo = self.geometry(u, true)?;
        let nx = geo.to_normal_coords(xi);
        Ok(geo.lambda_at(&nx))
    }

    /// One-sided derivative of the parent map at `b` along `dir`.
    fn directional(&self, b: &[f64], x0: &[f64], dir: &[f64]) -> Result<Vec<f64>> {
        let shift = |s: f64| -> Vec<f64> { b.iter().zip(dir).map(|(p, d)| p + s * d).collect() };
        let x1 = self.parent.eval(&shift(H_CONE))?;
        let x2 = self.parent.eval(&shift(2.0 * H_CONE))?;
        Ok((0..x0.len()).map(|c| (-3.0 * x0[c] + 4.0 * x1[c] - x2[c]) / (2.0 * H_CONE)).collect())
    }

    fn normal_ray(&self, geo: &FaceGeometry, w: &[f64]) -> Result<DVector<f64>> {
        let dir: Vec<f64> = w.iter().zip(&geo.base_point).map(|(a, b)| a - b).collect();
        let d = self.directional(&geo.base_point, &geo.point, &dir)?;
        let full = inner_g(&geo.metric, &d, &d).sqrt();
        let v = DVector::from_vec(geo.to_normal_coords(&d));
        let nv = v.norm();
        if !(nv > 1e-9 * full) {
            return Err(GeomError::DegenerateAt(geo.base_point.clone()));
        }
        Ok(v / nv)
    }

    /// The normal cone at `u`, with generators from the parent map's
    /// one-sided derivatives towards each vertex off the face.
    pub fn normal_cone(&self, u: &[f64], opts: ConeOptions) -> Result<NormalConeSample> {
        let geo = self.geometry(u, false)?;
        self.normal_cone_at(&geo, opts)
    }

    pub fn normal_cone_at(&self, geo: &FaceGeometry, opts: ConeOptions) -> Result<NormalConeSample> {
        let k = self.parent.dim_k();
        let comp: Vec<usize> = (0..=k).filter(|i| !self.vertex_subset.contains(i)).collect();
        let mut generators = Vec::with_capacity(comp.len());
        for &j in &comp {
            let mut w = vec![0.0; k + 1];
            w[j] = 1.0;
            generators.push(self.normal_ray(geo, &w)?);
        }
        let mut rays = generators.clone();
        let mut link = None;
        let curved = !self.parent.chart.is_constant_curvature();
        let m = if comp.len() == 2 { opts.arc_lattice } else { opts.lattice };
        if curved && comp.len() >= 2 && m >= 2 {
            let cx = lattice_complex(comp.len(), m);
            rays.clear();
            for lw in &cx.points {
                let mut w = vec![0.0; k + 1];
                for (i, &j) in comp.iter().enumerate() {
                    w[j] = lw[i];
                }
                rays.push(self.normal_ray(geo, &w)?);
            }
            link = Some(cx);
        }
        Ok(NormalConeSample {
            base_point: geo.base_point.clone(),
            point: geo.point.clone(),
            face_tangent_frame: geo.frame.clone(),
            normal_frame: geo.normals.clone(),
            cone_generators: generators,
            constraint_rays: rays,
            cone_tol: CONE_TOL,
            link,
        })
    }

    /// The induced metric of the face in collapsed coordinates, as a metric field.
    pub fn induced_metric(&self) -> InducedMetric<'_, 'a> {
        InducedMetric { face: self }
    }
}

/// Extend a g-orthonormal frame to a g-orthonormal basis; returns only the new columns.
fn complete_frame(g: &DMatrix<f64>, frame: &DMatrix<f64>) -> DMatrix<f64> {
    let n = g.nrows();
    let mut basis: Vec<DVector<f64>> = frame.column_iter().map(|c| c.into_owned()).collect();
    let mut added: Vec<DVector<f64>> = Vec::new();
    let ip = |a: &DVector<f64>, b: &DVector<f64>| (a.transpose() * g * b)[(0, 0)];
    while basis.len() < n {
        // pivot on the coordinate direction with the largest orthogonal residual
        let mut best: Option<(f64, DVector<f64>)> = None;
        for i in 0..n {
            let mut v = DVector::zeros(n);
            v[i] = 1.0;
            for _ in 0..2 {
                for b in &basis {
                    let c = ip(b, &v);
                    v -= b * c;
                }
            }
            let nv = ip(&v, &v).max(0.0).sqrt();
            if best.as_ref().is_none_or(|(m, _)| nv > *m) {
                best = Some((nv, v / nv.max(f64::MIN_POSITIVE)));
            }
        }
        let (_, v) = best.expect("n > 0");
        basis.push(v.clone());
        added.push(v);
    }
    if added.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&added)
    }
}

/// Induced metric `γ(u)` of a face; derivatives by fourth-order differences
/// of a fourth-order tangent, independent of the second fundamental form.
pub struct InducedMetric<'f, 'a> {
    face: &'f Face<'a>,
}

impl InducedMetric<'_, '_> {
    const H_TANGENT: f64 = 1e-3;
    // the outer differences divide roundoff of the inner ones by h², so the
    // outer step is the larger
    const H_JET: f64 = 1e-2;

    fn gamma(&self, u: &[f64]) -> DMatrix<f64> {
        let r = self.face.r();
        let chart = &self.face.parent.chart;
        let n = chart.dim();
        let h = Self::H_TANGENT;
        let p = |w: &[f64]| self.face.point(w).expect("face point inside chart");
        let mut t = DMatrix::zeros(n, r);
        for i in 0..r {
            let at = |s: f64| {
                let mut w = u.to_vec();
                w[i] += s * h;
                p(&w)
            };
            let (a, b, c, d) = (at(2.0), at(1.0), at(-1.0), at(-2.0));
            for k in 0..n {
                t[(k, i)] = (-a[k] + 8.0 * b[k] - 8.0 * c[k] + d[k]) / (12.0 * h);
            }
        }
        let g = chart.metric_matrix(&p(u));
        t.transpose() * g * t
    }
}

impl MetricField for InducedMetric<'_, '_> {
    fn dim(&self) -> usize {
        self.face.r()
    }

    fn contains(&self, u: &[f64]) -> bool {
        u.len() == self.face.r() && u.iter().all(|v| (-0.25..=1.25).contains(v)) && self.face.point(u).is_ok()
    }

    fn metric_matrix(&self, u: &[f64]) -> DMatrix<f64> {
        self.gamma(u)
    }

    fn analytic_jet(&self, u: &[f64]) -> Option<MetricJet> {
        let r = self.face.r();
        let h = Self::H_JET;
        let at = |shifts: &[(usize, f64)]| {
            let mut w = u.to_vec();
            for (i, s) in shifts {
                w[*i] += s * h;
            }
            self.gamma(&w)
        };
        let stencil = [(-2.0, 1.0), (-1.0, -8.0), (1.0, 8.0), (2.0, -1.0)];
        let mut jet = MetricJet::zeros(r);
        jet.g = self.gamma(u);
        let g0 = jet.g.clone();
        for k in 0..r {
            let mut d1 = DMatrix::zeros(r, r);
            for (s, c) in stencil {
                d1 += at(&[(k, s)]) * c;
            }
            d1 /= 12.0 * h;
            let (p2, p1, m1, m2) = (at(&[(k, 2.0)]), at(&[(k, 1.0)]), at(&[(k, -1.0)]), at(&[(k, -2.0)]));
            let d2 = (-&p2 + p1 * 16.0 - &g0 * 30.0 + m1 * 16.0 - m2) / (12.0 * h * h);
            for i in 0..r {
                for j in 0..r {
                    jet.dg[(k * r + i) * r + j] = d1[(i, j)];
                    jet.ddg[((k * r + k) * r + i) * r + j] = d2[(i, j)];
                }
            }
            for l in 0..k {
                let mut mixed = DMatrix::zeros(r, r);
                for (s, c) in stencil {
                    for (t, e) in stencil {
                        mixed += at(&[(k, s), (l, t)]) * (c * e);
                    }
                }
                mixed /= 144.0 * h * h;
                for i in 0..r {
                    for j in 0..r {
                        jet.ddg[((k * r + l) * r + i) * r + j] = mixed[(i, j)];
                        jet.ddg[((l * r + k) * r + i) * r + j] = mixed[(i, j)];
                    }
                }
            }
        }
        Some(jet)
    }
}

/// Perturb every coordinate by a uniform draw in `[-magnitude, magnitude]`.
pub fn jitter(vertices: &[Vec<f64>], magnitude: f64, seed: u64) -> Vec<Vec<f64>> {
    log::info!("jittering {} vertices by up to {magnitude:e}", vertices.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    vertices.iter().map(|p| p.iter().map(|c| c + rng.random_range(-magnitude..=magnitude)).collect()).collect()
}
