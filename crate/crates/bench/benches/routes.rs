use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use spinmeter::analytic::radial_kernel;
use spinmeter::checkerboard::run_walk;
use spinmeter::oracle::{propagate, SpectralGrid};
use spinmeter::{ExactRoute, QuadratureSpec, Spinor};
use spinmeter_bench::fixture;

fn kernel(c: &mut Criterion) {
    let spec = QuadratureSpec::default();
    let mut g = c.benchmark_group("radial_kernel");
    for q in [0.05, 0.2] {
        let cfg = fixture(q);
        g.bench_with_input(BenchmarkId::from_parameter(q), &cfg, |b, cfg| {
            b.iter(|| radial_kernel(black_box(0.97), cfg, &spec).unwrap())
        });
    }
    g.finish();
}

fn exact_table(c: &mut Criterion) {
    let spec = QuadratureSpec::default();
    let cfg = fixture(0.1);
    let mut g = c.benchmark_group("exact_route");
    g.sample_size(10);
    g.bench_function("build_q0.1", |b| b.iter(|| ExactRoute::new(&cfg, &spec).unwrap()));
    g.finish();
}

fn walk(c: &mut Criterion) {
    let cfg = fixture(0.05);
    let eta = Spinor::x_plus();
    let mut g = c.benchmark_group("walk");
    g.sample_size(10);
    for steps in [64usize, 256] {
        g.bench_with_input(BenchmarkId::from_parameter(steps), &steps, |b, &l| {
            b.iter(|| run_walk(&eta, l, &cfg).unwrap())
        });
    }
    g.finish();
}

fn spectral(c: &mut Criterion) {
    let cfg = fixture(0.1);
    let grid = SpectralGrid::new(256, 1.8, &cfg).unwrap();
    let eta = Spinor::z_plus();
    let mut g = c.benchmark_group("spectral");
    g.sample_size(10);
    g.bench_function("propagate_256", |b| b.iter(|| propagate(&eta, &cfg, &grid, false).unwrap()));
    g.finish();
}

criterion_group!(benches, kernel, exact_table, walk, spectral);
criterion_main!(benches);
