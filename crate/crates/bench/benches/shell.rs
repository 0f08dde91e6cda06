use criterion::{criterion_group, criterion_main, Criterion};
use hdxgeo_core::rng::stream;
use hdxgeo_core::shell::{build_shell_matrices, sample_shells, shell_spectral_check};

fn shells(c: &mut Criterion) {
    let mut group = c.benchmark_group("shell matrices");
    group.sample_size(10);
    let kappa = sample_shells(1500, 0.5, 400, &mut stream(1, "bench", 0)).unwrap();
    group.bench_function("build m=1500 d=400", |b| b.iter(|| build_shell_matrices(&kappa).unwrap()));
    let mats = build_shell_matrices(&kappa).unwrap();
    group.bench_function("deflated spectrum m=1500", |b| b.iter(|| shell_spectral_check(&mats, 1e-10).unwrap()));
    group.finish();
}

criterion_group!(benches, shells);
criterion_main!(benches);
