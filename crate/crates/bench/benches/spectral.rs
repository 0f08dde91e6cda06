use criterion::{criterion_group, criterion_main, Criterion};
use hdxgeo_core::complex::sample_geo_graph;
use hdxgeo_core::spectral::{normalized_adjacency, second_abs_eigenvalue_with, Method};

fn solvers(c: &mut Criterion) {
    let mut group = c.benchmark_group("second eigenvalue");
    group.sample_size(10);
    for n in [256, 1024] {
        let (g, _) = sample_geo_graph(n, 30, 0.1, 3).unwrap().to_weighted().without_isolated();
        let op = normalized_adjacency(&g).unwrap();
        group.bench_function(format!("dense n={n}"), |b| {
            b.iter(|| second_abs_eigenvalue_with(&op, 1e-8, Method::Dense).unwrap())
        });
        group.bench_function(format!("lanczos n={n}"), |b| {
            b.iter(|| second_abs_eigenvalue_with(&op, 1e-8, Method::Iterative).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, solvers);
criterion_main!(benches);
