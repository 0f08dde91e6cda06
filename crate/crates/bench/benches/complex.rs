use criterion::{criterion_group, criterion_main, Criterion};
use hdxgeo_core::complex::{build_two_complex, one_skeleton, sample_geo_graph};

fn complex(c: &mut Criterion) {
    let mut group = c.benchmark_group("complex");
    group.sample_size(10);
    group.bench_function("sample graph n=1000 d=40 p=0.25", |b| {
        b.iter(|| sample_geo_graph(1000, 40, 0.25, 7).unwrap())
    });
    let g = sample_geo_graph(1000, 40, 0.25, 7).unwrap();
    group.bench_function("triangles and skeleton n=1000", |b| {
        b.iter(|| one_skeleton(&build_two_complex(&g)))
    });
    group.finish();
}

criterion_group!(benches, complex);
criterion_main!(benches);
