use std::hint::black_box;

use cfsl_bench::fixture;
use cfsl_core::data::{generate, DatasetKind};
use cfsl_core::forward::{char_delta, weyl_function};
use cfsl_core::inverse::{jacobian, reconstruct, Init};
use cfsl_core::spectrum::{eigenvalues, norming_constants};
use cfsl_core::{InverseConfig, PotentialModel};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn forward(c: &mut Criterion) {
    let mut g = c.benchmark_group("forward");
    for alpha in [1.0, 0.5] {
        let p = fixture(alpha);
        g.bench_with_input(BenchmarkId::new("char_delta", alpha), &p, |b, p| {
            b.iter(|| char_delta(p, black_box(12.3)).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("weyl_function", alpha), &p, |b, p| {
            b.iter(|| weyl_function(p, black_box(-2.5)).unwrap())
        });
    }
    g.finish();
}

fn spectra(c: &mut Criterion) {
    let mut g = c.benchmark_group("spectrum");
    g.sample_size(20);
    for alpha in [1.0, 0.5] {
        let p = fixture(alpha);
        g.bench_with_input(BenchmarkId::new("eigenvalues_20", alpha), &p, |b, p| {
            b.iter(|| eigenvalues(p, black_box(20)).unwrap())
        });
        let eigs = eigenvalues(&p, 20).unwrap();
        g.bench_with_input(BenchmarkId::new("norming_20", alpha), &p, |b, p| {
            b.iter(|| norming_constants(p, black_box(&eigs)).unwrap())
        });
    }
    g.finish();
}

fn inverse(c: &mut Criterion) {
    let mut g = c.benchmark_group("inverse");
    g.sample_size(10);
    let p = fixture(0.8);
    let ds = generate(&p, DatasetKind::TwoSpectra, 12).unwrap();
    let model = PotentialModel::cosine(p.order, 6).unwrap();
    g.bench_function("jacobian_two_spectra", |b| b.iter(|| jacobian(black_box(&model), &ds).unwrap()));
    let small = generate(&p, DatasetKind::TwoSpectra, 8).unwrap();
    let cfg = InverseConfig {
        basis_size: Some(4),
        init: Init::Zero,
        ..Default::default()
    };
    g.bench_function("reconstruct_two_spectra_8", |b| b.iter(|| reconstruct(black_box(&small), &cfg).unwrap()));
    g.finish();
}

criterion_group!(benches, forward, spectra, inverse);
criterion_main!(benches);
