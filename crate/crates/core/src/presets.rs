//! Named vertex sets used by the CLI and the test suites.

use std::f64::consts::PI;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::metrics::ChartedMetric;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preset {
    pub name: String,
    pub model: ChartedMetric,
    pub vertices: Vec<Vec<f64>>,
}

pub const NAMES: &[&str] = &[
    "flat-4simplex",
    "regular-h4-side=1",
    "h2xh2-4simplex",
    "s2-octant",
    "h2-small",
    "h2-medium",
    "h2-near-ideal",
    "flat-triangle",
];

pub fn preset(name: &str) -> Result<Preset> {
    let (model, vertices) = match name {
        "flat-4simplex" => (ChartedMetric::euclidean(4), flat_4simplex()),
        "flat-triangle" => (ChartedMetric::euclidean(2), vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.3, 0.8]]),
        "h2xh2-4simplex" => (
            ChartedMetric::product(ChartedMetric::hyperbolic(2, -1.0), ChartedMetric::hyperbolic(2, -1.0)),
            h2xh2_4simplex(),
        ),
        "s2-octant" => (ChartedMetric::sphere(2, 1.0), s2_octant()),
        "h2-small" => (ChartedMetric::hyperbolic(2, -1.0), h2_equilateral(0.1)),
        "h2-medium" => (ChartedMetric::hyperbolic(2, -1.0), h2_equilateral(0.6)),
        "h2-near-ideal" => (ChartedMetric::hyperbolic(2, -1.0), h2_equilateral(0.999)),
        _ => {
            if let Some(side) = name.strip_prefix("regular-h4-side=") {
                let side: f64 =
                    side.parse().map_err(|_| GeomError::InvalidInput(format!("bad side length in preset {name:?}")))?;
                (ChartedMetric::hyperbolic(4, -1.0), regular_h4(side)?)
            } else {
                return Err(GeomError::InvalidInput(format!("unknown preset {name:?}; known: {}", NAMES.join(", "))));
            }
        }
    };
    Ok(Preset { name: name.to_string(), model, vertices })
}

fn flat_4simplex() -> Vec<Vec<f64>> {
    let mut v = vec![vec![0.0; 4]];
    for i in 0..4 {
        let mut e = vec![0.0; 4];
        e[i] = 1.0;
        v.push(e);
    }
    v
}

/// Unit vectors in `R^n` pairwise at inner product `-1/n`.
pub fn regular_directions(n: usize) -> Vec<DVector<f64>> {
    // centred standard basis of R^{n+1}, expressed in an orthonormal basis of the hyperplane
    let centred: Vec<DVector<f64>> = (0..=n)
        .map(|i| DVector::from_fn(n + 1, |k, _| if k == i { 1.0 } else { 0.0 } - 1.0 / (n as f64 + 1.0)))
        .collect();
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for c in centred.iter().take(n) {
        let mut w = c.clone();
        for b in &basis {
            w -= b * b.dot(&w);
        }
        basis.push(w.normalize());
    }
    centred.iter().map(|c| DVector::from_iterator(n, basis.iter().map(|b| b.dot(c))).normalize()).collect()
}

/// Regular geodesic 4-simplex of the given side in the unit-curvature ball,
/// centred at the origin.
pub fn regular_h4(side: f64) -> Result<Vec<Vec<f64>>> {
    if !(side > 0.0 && side.is_finite()) {
        return Err(GeomError::InvalidInput(format!("side must be positive, got {side}")));
    }
    // cosh(side) = 1 + sinh²ρ (1 - cos θ) with cos θ = -1/4
    let rho = (0.8 * (side.cosh() - 1.0)).sqrt().asinh();
    let r = (rho / 2.0).tanh();
    Ok(regular_directions(4).into_iter().map(|d| (d * r).iter().copied().collect()).collect())
}

fn h2xh2_4simplex() -> Vec<Vec<f64>> {
    let a = [[0.05, -0.1], [0.45, 0.05], [-0.2, 0.4], [-0.3, -0.3], [0.25, -0.45]];
    let b = [[0.1, 0.2], [-0.35, 0.1], [0.3, -0.25], [0.05, 0.5], [-0.15, -0.4]];
    a.iter().zip(&b).map(|(p, q)| vec![p[0], p[1], q[0], q[1]]).collect()
}

/// Octant triangle on the unit sphere, turned so its centre sits on the
/// chart equator away from the poles and the seam.
fn s2_octant() -> Vec<Vec<f64>> {
    let c = 1.0 / 3f64.sqrt();
    let s = (2.0f64 / 3.0).sqrt();
    (0..3)
        .map(|k| {
            let a = 2.0 * PI * k as f64 / 3.0;
            let (x, y, z) = (s * a.cos(), c, s * a.sin());
            vec![x.acos(), z.atan2(y)]
        })
        .collect()
}

/// Equilateral triangle with vertices at Euclidean radius `r` in the ball.
fn h2_equilateral(r: f64) -> Vec<Vec<f64>> {
    (0..3)
        .map(|k| {
            let a = 2.0 * PI * k as f64 / 3.0;
            vec![r * a.cos(), r * a.sin()]
        })
        .collect()
}
