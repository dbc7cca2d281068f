use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use fracproj::{box_dimension, energy, energy_layercake, pushforward, PlanarAngle};
use fracproj_bench::{cantor_square, planar_cantor};

fn energies(c: &mut Criterion) {
    let mu = planar_cantor(9);
    let mut group = c.benchmark_group("energy");
    group.bench_function("direct_cantor9_s0.5", |b| b.iter(|| energy(black_box(&mu), 0.5, 0.0).unwrap()));
    group.bench_function("layercake_cantor9_s0.5", |b| {
        b.iter(|| energy_layercake(black_box(&mu), 0.5, 0.0).unwrap())
    });
    group.finish();
}

fn projection_pipeline(c: &mut Criterion) {
    let mu = cantor_square(8);
    let scales: Vec<f64> = (2..=8).map(|k| 3f64.powi(-k)).collect();
    c.bench_function("pushforward_cantor_square8", |b| {
        b.iter(|| pushforward(&PlanarAngle, black_box(&[0.7]), &mu).unwrap())
    });
    let nu = pushforward(&PlanarAngle, &[0.7], &mu).unwrap();
    c.bench_function("box_dimension_projection8", |b| {
        b.iter(|| box_dimension(black_box(nu.cloud()), &scales).unwrap())
    });
}

criterion_group!(benches, energies, projection_pipeline);
criterion_main!(benches);
