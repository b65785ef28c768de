use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use geosimplex::gaussbonnet::{angle_defect_2d, face_contribution, Budgets};
use geosimplex::integrands::{psi_extrinsic, psi_intrinsic, random_curvature_tensor, random_symmetric, FrameData};
use geosimplex::metrics::{curvature_at, ChartedMetric};
use geosimplex::oracle::{closed_form_oracle, OracleOptions};
use geosimplex::presets::preset;
use geosimplex::GeodesicSimplex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn integrands(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let r4 = random_curvature_tensor(4, &mut rng);
    c.bench_function("psi_intrinsic_4d", |b| b.iter(|| psi_intrinsic(black_box(&r4), 1.0)));
    let fd = FrameData {
        point: vec![],
        riemann: random_curvature_tensor(2, &mut rng),
        gamma: 1.0,
        lambda: vec![random_symmetric(2, &mut rng), random_symmetric(2, &mut rng)],
    };
    c.bench_function("psi_extrinsic_r2_n4", |b| b.iter(|| psi_extrinsic(&fd, black_box(&[0.6, 0.8]), 2, 4)));
    c.bench_function("oracle_100_trials", |b| {
        b.iter(|| closed_form_oracle(&OracleOptions { trials: 100, ..Default::default() }))
    });
}

fn geometry(c: &mut Criterion) {
    let h4 = ChartedMetric::hyperbolic(4, -1.0);
    let x = [0.1, -0.2, 0.05, 0.3];
    c.bench_function("curvature_h4", |b| b.iter(|| curvature_at(&h4, black_box(&x))));
    let p = preset("regular-h4-side=1").unwrap();
    let s = GeodesicSimplex::build(&p.model, p.vertices).unwrap();
    let face = s.face(&[0, 1, 2]).unwrap();
    c.bench_function("face_geometry_h4_2face", |b| b.iter(|| face.geometry(black_box(&[0.3, 0.4]), true)));
}

fn strata(c: &mut Criterion) {
    let p = preset("h2-medium").unwrap();
    let tri = GeodesicSimplex::build(&p.model, p.vertices).unwrap();
    c.bench_function("angle_defect_h2_order16", |b| b.iter(|| angle_defect_2d(&tri, 16)));
    let p = preset("regular-h4-side=1").unwrap();
    let s = GeodesicSimplex::build(&p.model, p.vertices).unwrap();
    let budgets = Budgets { order: 4, mc_samples: 2_000, ..Budgets::default() };
    let face = s.face(&[0, 1, 2]).unwrap();
    let mut g = c.benchmark_group("face_contribution");
    g.sample_size(10);
    g.bench_function("h4_2face_order4", |b| b.iter(|| face_contribution(&s, &face, &budgets, 0)));
    g.finish();
}

criterion_group!(benches, integrands, geometry, strata);
criterion_main!(benches);
