use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use falsify_bench::{first_kkt_system, setup};
use falsify_core::bench::SystemKind;
use falsify_core::dynamics::{flow, flow_with_sensitivity};
use falsify_core::formulation::evaluate_segments;
use falsify_core::kkt::{solve_direct, solve_ppcg, PpcgOptions};
use falsify_core::sqp::{self, SqpConfig};
use falsify_core::{Formulation, HessianApprox, HessianKind};
use nalgebra::DVector;

fn bench_integrator(c: &mut Criterion) {
    let cfg = SqpConfig::default().integrator;
    let mut group = c.benchmark_group("integrator");
    for n in [4, 10, 30] {
        let sys = SystemKind::Benchmark3.build(n).unwrap();
        let x0 = DVector::from_element(n, 1.0);
        group.bench_with_input(BenchmarkId::new("flow", n), &n, |b, _| {
            b.iter(|| flow(&sys, black_box(&x0), 5.0, &cfg).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("flow_with_sensitivity", n), &n, |b, _| {
            b.iter(|| flow_with_sensitivity(&sys, black_box(&x0), 5.0, &cfg).unwrap())
        });
    }
    group.finish();
}

fn bench_segments(c: &mut Criterion) {
    let cfg = SqpConfig::default().integrator;
    let mut group = c.benchmark_group("segments");
    for segments in [5, 20] {
        let (instance, x) = setup(SystemKind::Benchmark3, 10, segments);
        group.bench_with_input(BenchmarkId::new("evaluate", segments), &segments, |b, _| {
            b.iter(|| evaluate_segments(&instance, black_box(&x), &cfg).unwrap())
        });
    }
    group.finish();
}

fn bench_kkt(c: &mut Criterion) {
    let formulation = Formulation::equation(8).unwrap();
    let mut group = c.benchmark_group("kkt");
    for (n, segments) in [(4, 10), (10, 20), (20, 30)] {
        let (instance, x) = setup(SystemKind::Benchmark3, n, segments);
        let sys = first_kkt_system(&formulation, &instance, x, HessianKind::BlockDiagonal);
        let opts = PpcgOptions::for_system(&sys);
        let id = format!("n{n}_N{segments}");
        group.bench_function(BenchmarkId::new("ppcg", &id), |b| {
            b.iter(|| solve_ppcg(black_box(&sys), &opts).unwrap())
        });
        group.bench_function(BenchmarkId::new("direct", &id), |b| {
            b.iter(|| solve_direct(black_box(&sys)).unwrap())
        });
    }
    group.finish();
}

fn bench_hessian(c: &mut Criterion) {
    let (n, segments) = (10, 20);
    let m1 = segments * (n + 1);
    let s = DVector::from_fn(m1, |i, _| ((i + 1) as f64 * 0.37).sin());
    let y = DVector::from_fn(m1, |i, _| s[i] * (1.5 + ((i as f64) * 0.11).cos()));
    let mut group = c.benchmark_group("hessian_update");
    for kind in [HessianKind::Full, HessianKind::BlockDiagonal, HessianKind::Banded] {
        group.bench_function(kind.to_string(), |b| {
            b.iter_batched(
                || HessianApprox::identity(kind, n, segments),
                |mut h| h.update(black_box(&s), black_box(&y)),
                criterion::BatchSize::SmallInput,
            )
        });
    }
    group.finish();
}

fn bench_sqp(c: &mut Criterion) {
    let cfg = SqpConfig::default();
    let formulation = Formulation::equation(8).unwrap();
    let mut group = c.benchmark_group("sqp");
    group.sample_size(10);
    for segments in [5, 10] {
        let (instance, x) = setup(SystemKind::Benchmark2, 3, segments);
        group.bench_with_input(BenchmarkId::new("benchmark2_eq8", segments), &segments, |b, _| {
            b.iter(|| sqp::run(&formulation, &instance, x.clone(), &cfg).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_integrator, bench_segments, bench_kkt, bench_hessian, bench_sqp);
criterion_main!(benches);
