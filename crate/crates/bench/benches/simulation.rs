use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use percodyn_core::dyn_sim::{simulate_timeline, SimConfig};
use percodyn_core::gadget::{build_gadget, connect_estimate, persistence_estimate};
use percodyn_core::TreeProfile;

fn simulation(c: &mut Criterion) {
    let prof = TreeProfile::homogeneous(2, 0.5, 12).unwrap();
    let config = SimConfig::new(12, 1, 1);
    c.bench_function("timeline binary depth 12", |b| {
        let mut replica = 0u64;
        b.iter(|| {
            replica += 1;
            simulate_timeline(&prof, &config, black_box(replica)).unwrap()
        })
    });

    let g = build_gadget(2, 2, 36).unwrap();
    let mut group = c.benchmark_group("gadget j=2 m=2 radius 36");
    group.sample_size(10);
    group.bench_function("connect 100 replicas", |b| {
        b.iter(|| connect_estimate(&g.network, 0.5, 100, black_box(3)).unwrap())
    });
    group.bench_function("persistence 100 replicas", |b| {
        b.iter(|| persistence_estimate(&g.network, 0.5, 0.5, 100, black_box(3)).unwrap())
    });
    group.finish();
}

criterion_group!(benches, simulation);
criterion_main!(benches);
