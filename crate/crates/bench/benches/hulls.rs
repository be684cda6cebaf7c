use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use secnav_bench::cloud;
use secnav_core::geometry::{chan_hull, graham_scan, point_in_convex_hull, Point2};

fn bench_hulls(c: &mut Criterion) {
    let mut group = c.benchmark_group("convex_hull");
    for n in [64usize, 512, 4096] {
        let points = cloud(n as u64, n);
        group.bench_with_input(BenchmarkId::new("graham_scan", n), &points, |b, pts| {
            b.iter(|| graham_scan(black_box(pts)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("chan_hull", n), &points, |b, pts| {
            b.iter(|| chan_hull(black_box(pts)).unwrap())
        });
    }
    group.finish();
}

fn bench_inclusion(c: &mut Criterion) {
    let hull = graham_scan(&cloud(7, 256)).unwrap();
    let probes = cloud(8, 1024);
    c.bench_function("point_in_convex_hull_1024", |b| {
        b.iter(|| {
            probes
                .iter()
                .filter(|&&p| point_in_convex_hull(black_box(p), &hull))
                .count()
        })
    });
    let centroid: Point2 = hull.centroid();
    c.bench_function("point_in_convex_hull_single", |b| {
        b.iter(|| point_in_convex_hull(black_box(centroid), &hull))
    });
}

criterion_group!(benches, bench_hulls, bench_inclusion);
criterion_main!(benches);
