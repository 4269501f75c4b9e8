use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use kingman_core::moments::cov_l_windows;
use kingman_core::urn::{exact_path_law, sample_urn_path};
use kingman_core::*;

fn samplers(c: &mut Criterion) {
    let mut group = c.benchmark_group("samplers");
    for n in [50usize, 1000, 10_000] {
        let mut rng = replicate_stream(1, 0, 0);
        group.bench_with_input(BenchmarkId::new("urn_path", n), &n, |b, &n| {
            b.iter(|| sample_urn_path(black_box(n), &mut rng).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("waiting_times", n), &n, |b, &n| {
            b.iter(|| sample_waiting_times(black_box(n), &mut rng).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("labeled_history", n), &n, |b, &n| {
            b.iter(|| sample_labeled_history(black_box(n), &mut rng).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("total_length", n), &n, |b, &n| {
            b.iter(|| {
                let t = sample_waiting_times(n, &mut rng).unwrap();
                let h = sample_merge_history(n, &mut rng).unwrap();
                total_external_length(&t, &h).unwrap()
            })
        });
    }
    group.finish();
}

fn exact(c: &mut Criterion) {
    c.bench_function("exact_path_law/9", |b| b.iter(|| exact_path_law(black_box(9)).unwrap()));
    c.bench_function("moment_oracle/10000", |b| b.iter(|| MomentOracle::new(black_box(10_000))));
    c.bench_function("cov_l_windows/200", |b| {
        b.iter(|| cov_l_windows(black_box(200), (0.5, 0.75), (0.75, 1.0)).unwrap())
    });
}

fn replicates(c: &mut Criterion) {
    let spec = StatisticSpec::new(StatisticKind::L, 50);
    c.bench_function("simulate/L_50x1000", |b| b.iter(|| simulate(&spec, 1000, black_box(7), 1).unwrap()));
}

criterion_group!(benches, samplers, exact, replicates);
criterion_main!(benches);
