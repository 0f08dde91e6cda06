use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use hdxgeo_core::capwalk::CapWalk;
use hdxgeo_core::rng::stream;
use hdxgeo_core::sphere::{tau_of, BetaDist, CapSampler, TailTable, UnitVector};

fn tails(c: &mut Criterion) {
    let dist = BetaDist::new(200).unwrap();
    c.bench_function("tail quadrature d=200", |b| b.iter(|| dist.tail(black_box(0.3)).unwrap()));
    c.bench_function("tau_of p=1e-3 d=200", |b| b.iter(|| tau_of(black_box(1e-3), 200).unwrap()));
    c.bench_function("tail table build d=400", |b| b.iter(|| TailTable::new(black_box(400)).unwrap()));
    let table = TailTable::new(400).unwrap();
    c.bench_function("tail table lookup", |b| b.iter(|| table.tail(black_box(0.123)).unwrap()));
}

fn sampling(c: &mut Criterion) {
    let sampler = CapSampler::new(100, 0.5).unwrap();
    let center = UnitVector::basis(100, 0).unwrap();
    let mut rng = stream(1, "bench", 0);
    c.bench_function("cap sample d=100", |b| b.iter(|| sampler.sample_around(&center, &mut rng)));
    let walk = CapWalk::new(100, 0.01).unwrap();
    c.bench_function("cap walk step d=100", |b| b.iter(|| walk.step(&center, &mut rng)));
}

criterion_group!(benches, tails, sampling);
criterion_main!(benches);
