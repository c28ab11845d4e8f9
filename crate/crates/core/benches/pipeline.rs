use accr_core::geometry::PointGeometry;
use accr_core::{builtin, Execution, MetricTag};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn per_point_geometry(c: &mut Criterion) {
    let cone = builtin("cone-flat-fiber").unwrap();
    let mut group = c.benchmark_group("point_geometry");
    for samples in [64usize, 512] {
        let points = cone.chart.latin_hypercube(samples, 42);
        for (label, exec) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
            group.bench_with_input(BenchmarkId::new(label, samples), &points, |b, points| {
                b.iter(|| {
                    exec.map(points, |p| {
                        let g = PointGeometry::new(&cone, MetricTag::G, p).unwrap();
                        let gt = PointGeometry::new(&cone, MetricTag::GTilde, p).unwrap();
                        g.curvature.tau + gt.curvature.tau
                    })
                })
            });
        }
    }
    group.finish();
}

criterion_group!(benches, per_point_geometry);
criterion_main!(benches);
