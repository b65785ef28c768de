//! Quadrature over simplices and over unit normal spheres and dual cones.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::integrands::sphere_area;
use crate::simplices::NormalConeSample;

/// Points per axis on the unit circle for full-circle integrals.
pub const CIRCLE_POINTS: usize = 64;
/// Gauss–Legendre points on a dual arc.
pub const ARC_POINTS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QuadMethod {
    SimplexRule,
    TensorDuffy,
    MonteCarloCone,
    CircleArc,
    SinglePoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadResult {
    pub value: f64,
    /// Monte Carlo standard error, or the order-refinement difference for deterministic rules.
    pub std_error: f64,
    pub n_evals: usize,
    pub method: QuadMethod,
}

/// Gauss–Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(k: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(k >= 1);
    let mut nodes = vec![0.0; k];
    let mut weights = vec![0.0; k];
    for i in 0..k {
        let mut x = (PI * (i as f64 + 0.75) / (k as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // P_k(x) by the three-term recurrence
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=k {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            let pk = if k == 1 { x } else { p1 };
            let pkm1 = if k == 1 { 1.0 } else { p0 };
            dp = k as f64 * (x * pk - pkm1) / (x * x - 1.0);
            let dx = pk / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = 0.5 * (1.0 - x);
        weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    fn rec(left: usize, parts: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for c in 0..=left {
            cur.push(c);
            rec(left - c, parts - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(total, parts, &mut Vec::new(), &mut out);
    out
}

/// Grundmann–Möller rule of degree `2s+1` on `Δ^r`: barycentric points and
/// weights summing to the volume `1/r!` of the standard simplex.
pub fn grundmann_moeller(r: usize, s: usize) -> Vec<(Vec<f64>, f64)> {
    let d = 2 * s + 1;
    let fact = |m: usize| (1..=m).map(|k| k as f64).product::<f64>();
    let mut out = Vec::new();
    for i in 0..=s {
        let denom = (d + r - 2 * i) as f64;
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        let w = sign * 2f64.powi(-2 * s as i32) * denom.powi(d as i32) / (fact(i) * fact(d + r - i));
        for beta in compositions(s - i, r + 1) {
            let b = beta.iter().map(|&bj| (2 * bj + 1) as f64 / denom).collect();
            out.push((b, w));
        }
    }
    out
}

fn gm_index(order: usize) -> usize {
    order.saturating_sub(1).div_ceil(2).max(1)
}

/// Integrate `f(b)` over the standard simplex `Δ^r` (barycentric argument,
/// Lebesgue measure of total mass `1/r!`) with a Grundmann–Möller rule of
/// degree at least `order`; the error is the change from the next lower rule.
pub fn integrate_simplex<F>(f: F, r: usize, order: usize) -> Result<QuadResult>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    if r == 0 {
        return Ok(QuadResult { value: f(&[1.0])?, std_error: 0.0, n_evals: 1, method: QuadMethod::SimplexRule });
    }
    let s = gm_index(order);
    let apply = |s: usize| -> Result<(f64, usize)> {
        let rule = grundmann_moeller(r, s);
        let mut acc = 0.0;
        for (b, w) in &rule {
            acc += w * f(b)?;
        }
        Ok((acc, rule.len()))
    };
    let (hi, n_hi) = apply(s)?;
    let (lo, n_lo) = apply(s - 1)?;
    Ok(QuadResult { value: hi, std_error: (hi - lo).abs(), n_evals: n_hi + n_lo, method: QuadMethod::SimplexRule })
}

/// Tensor Gauss–Legendre nodes on `[0,1]^r` with `k` points per axis.
pub fn tensor_nodes(r: usize, k: usize) -> Vec<(Vec<f64>, f64)> {
    let (x, w) = gauss_legendre(k);
    let mut out = vec![(Vec::with_capacity(r), 1.0)];
    for _ in 0..r {
        let mut next = Vec::with_capacity(out.len() * k);
        for (p, pw) in &out {
            for i in 0..k {
                let mut q = p.clone();
                q.push(x[i]);
                next.push((q, pw * w[i]));
            }
        }
        out = next;
    }
    out
}

/// Integrate `f(u)` over `[0,1]^r` with `order` Gauss–Legendre points per
/// axis; the error is the change from `order - 2` points. For face integrals
/// `f` already carries the volume element in collapsed coordinates.
pub fn integrate_collapsed<F>(f: F, r: usize, order: usize) -> Result<QuadResult>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let order = order.max(3);
    let apply = |k: usize| -> Result<(f64, usize)> {
        let nodes = tensor_nodes(r, k);
        let mut acc = 0.0;
        for (u, w) in &nodes {
            acc += w * f(u)?;
        }
        Ok((acc, nodes.len()))
    };
    let (hi, n_hi) = apply(order)?;
    let (lo, n_lo) = apply(order - 2)?;
    Ok(QuadResult { value: hi, std_error: (hi - lo).abs(), n_evals: n_hi + n_lo, method: QuadMethod::TensorDuffy })
}

/// The random stream for one Monte Carlo task.
pub fn mc_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn unit_gaussian(rng: &mut ChaCha8Rng, d: usize, buf: &mut [f64]) {
    loop {
        let mut s = 0.0;
        for v in buf.iter_mut().take(d) {
            let z: f64 = StandardNormal.sample(rng);
            *v = z;
            s += z * z;
        }
        if s > 1e-300 {
            let inv = 1.0 / s.sqrt();
            for v in buf.iter_mut().take(d) {
                *v *= inv;
            }
            return;
        }
    }
}

/// Monte Carlo mean of `f·[accept]` over the unit sphere `S^{d-1}`, scaled by `ω_{d-1}`.
fn mc_sphere<F, A>(psi: F, accept: A, d: usize, n_samples: usize, rng: &mut ChaCha8Rng) -> (QuadResult, usize)
where
    F: Fn(&[f64]) -> f64,
    A: Fn(&[f64]) -> f64,
{
    let n = n_samples.max(2);
    let mut buf = vec![0.0; d];
    let (mut s1, mut s2) = (0.0, 0.0);
    let mut hits = 0;
    for _ in 0..n {
        unit_gaussian(rng, d, &mut buf);
        let wt = accept(&buf);
        if wt != 0.0 {
            let v = wt * psi(&buf);
            s1 += v;
            s2 += v * v;
            hits += 1;
        }
    }
    let area = sphere_area(d - 1);
    let mean = s1 / n as f64;
    let var = (s2 / n as f64 - mean * mean).max(0.0) * n as f64 / (n - 1) as f64;
    let res = QuadResult {
        value: area * mean,
        std_error: area * (var / n as f64).sqrt(),
        n_evals: n,
        method: QuadMethod::MonteCarloCone,
    };
    (res, hits)
}

/// `∫_{S^{codim-1}} ψ(ξ) dξ` with the unnormalized surface measure: exact on
/// `S^0`, a [`CIRCLE_POINTS`]-point trapezoid rule on the circle, Monte Carlo above.
pub fn integrate_normal_sphere<F>(psi: F, codim: usize, n_samples: usize, rng: &mut ChaCha8Rng) -> QuadResult
where
    F: Fn(&[f64]) -> f64,
{
    match codim {
        0 => QuadResult { value: psi(&[]), std_error: 0.0, n_evals: 1, method: QuadMethod::SinglePoint },
        1 => QuadResult {
            value: psi(&[1.0]) + psi(&[-1.0]),
            std_error: 0.0,
            n_evals: 2,
            method: QuadMethod::SinglePoint,
        },
        2 => {
            let h = 2.0 * PI / CIRCLE_POINTS as f64;
            let value = (0..CIRCLE_POINTS)
                .map(|i| {
                    let t = i as f64 * h;
                    psi(&[t.cos(), t.sin()])
                })
                .sum::<f64>()
                * h;
            QuadResult { value, std_error: 0.0, n_evals: CIRCLE_POINTS, method: QuadMethod::CircleArc }
        }
        d => mc_sphere(psi, |_| 1.0, d, n_samples, rng).0,
    }
}

/// `∫_{N(x)*} ψ(ξ) dξ`, `ξ` in normal-frame coordinates.
///
/// Codimension one evaluates at the inward normal, codimension two uses
/// Gauss–Legendre on the dual arc, higher codimension uses rejection
/// sampling of uniform directions.
pub fn integrate_dual_cone<F>(psi: F, cone: &NormalConeSample, n_samples: usize, rng: &mut ChaCha8Rng) -> QuadResult
where
    F: Fn(&[f64]) -> f64,
{
    match cone.codim() {
        0 => QuadResult { value: psi(&[]), std_error: 0.0, n_evals: 1, method: QuadMethod::SinglePoint },
        1 => {
            let s = cone.inward_normal().expect("codimension one");
            QuadResult { value: psi(&[s]), std_error: 0.0, n_evals: 1, method: QuadMethod::SinglePoint }
        }
        2 => match cone.dual_arc() {
            Some((a, b)) => {
                let (x, w) = gauss_legendre(ARC_POINTS);
                let len = b - a;
                let value = x
                    .iter()
                    .zip(&w)
                    .map(|(t, wt)| {
                        let th = a + len * t;
                        wt * psi(&[th.cos(), th.sin()])
                    })
                    .sum::<f64>()
                    * len;
                QuadResult { value, std_error: 0.0, n_evals: ARC_POINTS, method: QuadMethod::CircleArc }
            }
            None => {
                log::warn!("empty dual cone at {:?}", cone.base_point);
                QuadResult { value: 0.0, std_error: 0.0, n_evals: 1, method: QuadMethod::CircleArc }
            }
        },
        d => {
            let (res, hits) = mc_sphere(psi, |xi| cone.dual_weight(xi), d, n_samples, rng);
            if hits == 0 {
                log::warn!("empty dual cone at {:?}: no sample accepted", cone.base_point);
            }
            res
        }
    }
}
