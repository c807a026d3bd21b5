use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mmplc_bench::gaussian;
use mmplc_core::matrix::{singular_values, svd};
use std::hint::black_box;

fn bench_svd(c: &mut Criterion) {
    let mut group = c.benchmark_group("svd");
    group.sample_size(20);
    for (rows, cols) in [(64, 64), (200, 200), (400, 200), (1600, 200), (6144, 64)] {
        let m = gaussian(rows, cols);
        let id = format!("{rows}x{cols}");
        group.bench_with_input(BenchmarkId::new("full", &id), &m, |b, m| {
            b.iter(|| svd(black_box(m)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("values", &id), &m, |b, m| {
            b.iter(|| singular_values(black_box(m)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_svd);
criterion_main!(benches);
