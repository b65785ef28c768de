//! Gauss–Bonnet integrands: the intrinsic `Ψ_n`, the extrinsic `Ψ_{r,f}` and
//! `Ψ_r`, and the explicit four-dimensional formulas used to cross-check
//! the permutation sums.
//!
//! Curvature convention: `R_abcd = ⟨R(e_c, e_d) e_b, e_a⟩`, so that
//! `R_1212 / det g` is the sectional curvature (`+1` on the unit sphere).

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::Rng;
use statrs::function::gamma::gamma;

use crate::error::{GeomError, Result};
use crate::metrics::{curvature_norms, CurvatureData, Tensor4};
use crate::simplices::FaceGeometry;

/// Area `ω_n` of the unit `n`-sphere, `2 (4π)^{n/2} Γ(n/2 + 1) / n!`.
pub fn sphere_area(n: usize) -> f64 {
    let fact: f64 = (1..=n).map(|k| k as f64).product();
    2.0 * (4.0 * PI).powf(n as f64 / 2.0) * gamma(n as f64 / 2.0 + 1.0) / fact
}

/// Permutations of `0..r` with their signs.
pub fn signed_permutations(r: usize) -> Vec<(Vec<usize>, f64)> {
    fn rec(cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<(Vec<usize>, f64)>) {
        let r = used.len();
        if cur.len() == r {
            let mut inv = 0;
            for i in 0..r {
                for j in i + 1..r {
                    if cur[i] > cur[j] {
                        inv += 1;
                    }
                }
            }
            out.push((cur.clone(), if inv % 2 == 0 { 1.0 } else { -1.0 }));
            return;
        }
        for i in 0..r {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                rec(cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; r], &mut out);
    out
}

/// Curvature and second fundamental form data of a face at one point, in a
/// frame of its tangent space.
#[derive(Debug, Clone)]
pub struct FrameData {
    pub point: Vec<f64>,
    /// Ambient curvature restricted to the frame (`r` indices each).
    pub riemann: Tensor4,
    /// Determinant of the induced metric in this frame; `1` for orthonormal frames.
    pub gamma: f64,
    /// `Λ^a`, one per vector of an orthonormal normal frame.
    pub lambda: Vec<DMatrix<f64>>,
}

impl FrameData {
    pub fn from_geometry(geo: &FaceGeometry, curvature: &CurvatureData) -> Self {
        Self {
            point: geo.point.clone(),
            riemann: curvature.riemann.pullback(&geo.frame),
            gamma: 1.0,
            lambda: geo.lambda.clone(),
        }
    }

    pub fn r(&self) -> usize {
        self.riemann.dim()
    }

    pub fn codim(&self) -> usize {
        self.lambda.len()
    }

    /// `Λ(ξ) = Σ_a ξ_a Λ^a`.
    pub fn lambda_at(&self, xi: &[f64]) -> DMatrix<f64> {
        let r = self.r();
        let mut out = DMatrix::zeros(r, r);
        for (l, x) in self.lambda.iter().zip(xi) {
            out += l * *x;
        }
        out
    }

    /// Gaussian curvature of a 2-face from the Gauss equation.
    pub fn gauss_curvature(&self) -> f64 {
        let mut k = self.riemann.get(0, 1, 0, 1);
        for l in &self.lambda {
            k += l[(0, 0)] * l[(1, 1)] - l[(0, 1)] * l[(1, 0)];
        }
        k / self.gamma
    }
}

/// `Σ_{i,j ∈ S_r} ε(i) ε(j) Π_{m<f} R_{i_{2m} i_{2m+1} j_{2m} j_{2m+1}} Π_{m≥2f} Λ_{i_m j_m}`.
fn permutation_sum(riemann: &Tensor4, lambda: &DMatrix<f64>, r: usize, f: usize) -> f64 {
    let perms = signed_permutations(r);
    let mut total = 0.0;
    for (i, si) in &perms {
        for (j, sj) in &perms {
            let mut term = si * sj;
            for m in 0..f {
                term *= riemann.get(i[2 * m], i[2 * m + 1], j[2 * m], j[2 * m + 1]);
            }
            for m in 2 * f..r {
                term *= lambda[(i[m], j[m])];
            }
            total += term;
        }
    }
    total
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Intrinsic integrand `Ψ_n` from a lowered curvature tensor and metric determinant.
/// Zero in odd dimensions.
pub fn psi_intrinsic(riemann: &Tensor4, det_g: f64) -> f64 {
    let n = riemann.dim();
    if n % 2 == 1 {
        return 0.0;
    }
    let empty = DMatrix::zeros(0, 0);
    let sum = permutation_sum(riemann, &empty, n, n / 2);
    2.0 / sphere_area(n) / (2f64.powi(n as i32 / 2) * factorial(n)) * sum / det_g
}

/// As [`psi_intrinsic`], but odd dimensions are an error.
pub fn psi_intrinsic_checked(c: &CurvatureData) -> Result<f64> {
    let n = c.riemann.dim();
    if n % 2 == 1 {
        return Err(GeomError::OddDimension(n));
    }
    Ok(psi_intrinsic(&c.riemann, c.det_g))
}

fn check_indices(r: usize, f: usize, n: usize) -> Result<()> {
    if 2 * f > r || r >= n {
        return Err(GeomError::IndexError { r, f, n });
    }
    Ok(())
}

/// `Ψ_{r,f}(x, ξ)` for an `r`-face in ambient dimension `n`; `ξ` in normal-frame coordinates.
pub fn psi_extrinsic_rf(fd: &FrameData, xi: &[f64], r: usize, f: usize, n: usize) -> Result<f64> {
    check_indices(r, f, n)?;
    if fd.r() != r {
        return Err(GeomError::DimensionMismatch { expected: r, got: fd.r() });
    }
    let lam = if 2 * f < r { fd.lambda_at(xi) } else { DMatrix::zeros(r, r) };
    let pre = 2.0
        / (sphere_area(2 * f) * sphere_area(n - 2 * f - 1))
        / (2f64.powi(f as i32) * factorial(2 * f) * factorial(r - 2 * f));
    Ok(pre * permutation_sum(&fd.riemann, &lam, r, f) / fd.gamma)
}

/// `Ψ_r(x, ξ) = Σ_{0 ≤ 2f ≤ r} Ψ_{r,f}(x, ξ)`.
pub fn psi_extrinsic(fd: &FrameData, xi: &[f64], r: usize, n: usize) -> Result<f64> {
    check_indices(r, 0, n)?;
    let mut total = 0.0;
    for f in 0..=r / 2 {
        total += psi_extrinsic_rf(fd, xi, r, f, n)?;
    }
    Ok(total)
}

/// Inputs to the explicit four-dimensional formulas.
pub enum ClosedFormInput<'a> {
    /// An `r`-face, `r ≤ 3`: restricted curvature, `Λ(ξ)` and `γ`.
    Face {
        riemann: &'a Tensor4,
        lambda: &'a DMatrix<f64>,
        gamma: f64,
    },
    Interior(&'a CurvatureData),
}

/// The explicit `n = 4` integrands.
pub fn psi_closed_form_4d(r: usize, input: ClosedFormInput<'_>) -> Result<f64> {
    let pi2 = PI * PI;
    match (r, input) {
        (4, ClosedFormInput::Interior(c)) => {
            let (r2, ric2, s2) = curvature_norms(c);
            Ok((r2 - 4.0 * ric2 + s2) / (32.0 * pi2))
        }
        (0, ClosedFormInput::Face { .. }) => Ok(1.0 / (2.0 * pi2)),
        (1, ClosedFormInput::Face { lambda, gamma, .. }) => Ok(lambda[(0, 0)] / (2.0 * pi2 * gamma)),
        (2, ClosedFormInput::Face { riemann, lambda, gamma }) => {
            Ok((riemann.get(0, 1, 0, 1) + 2.0 * lambda.determinant()) / (4.0 * pi2 * gamma))
        }
        (3, ClosedFormInput::Face { riemann, lambda, gamma }) => {
            let eps = signed_permutations(3);
            let mut contraction = 0.0;
            for (i, si) in &eps {
                for (j, sj) in &eps {
                    contraction += si * sj * riemann.get(i[0], i[1], j[0], j[1]) * lambda[(i[2], j[2])];
                }
            }
            Ok(lambda.determinant() / (2.0 * pi2 * gamma) + contraction / (16.0 * pi2 * gamma))
        }
        (r, _) => Err(GeomError::IndexError { r, f: 0, n: 4 }),
    }
}

/// Random symmetric matrix with entries uniform in `[-1, 1]`.
pub fn random_symmetric<R: Rng + ?Sized>(r: usize, rng: &mut R) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(r, r);
    for i in 0..r {
        for j in 0..=i {
            let v = rng.random_range(-1.0..=1.0);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// Kulkarni–Nomizu product `(h ∧ k)_abcd = h_ac k_bd + h_bd k_ac - h_ad k_bc - h_bc k_ad`.
pub fn kulkarni_nomizu(h: &DMatrix<f64>, k: &DMatrix<f64>) -> Tensor4 {
    let n = h.nrows();
    let mut t = Tensor4::zeros(n);
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let v =
                        h[(a, c)] * k[(b, d)] + h[(b, d)] * k[(a, c)] - h[(a, d)] * k[(b, c)] - h[(b, c)] * k[(a, d)];
                    t.set(a, b, c, d, v);
                }
            }
        }
    }
    t
}

/// A random algebraic curvature tensor: a sum of Kulkarni–Nomizu products of
/// random symmetric matrices (all symmetries and Bianchi hold exactly).
pub fn random_curvature_tensor<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Tensor4 {
    let mut t = Tensor4::zeros(dim);
    for _ in 0..3 {
        let p = kulkarni_nomizu(&random_symmetric(dim, rng), &random_symmetric(dim, rng));
        for a in 0..dim {
            for b in 0..dim {
                for c in 0..dim {
                    for d in 0..dim {
                        t.set(a, b, c, d, t.get(a, b, c, d) + 0.5 * p.get(a, b, c, d));
                    }
                }
            }
        }
    }
    t
}
