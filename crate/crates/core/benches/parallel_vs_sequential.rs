use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use uavtl::cityworld::{EnvConfig, EnvId, Profile};
use uavtl::par::Execution;
use uavtl::radiomap::build_radio_map_with;

fn radio_map(c: &mut Criterion) {
    let mut group = c.benchmark_group("radio_map");
    group.sample_size(10);
    for (label, cell) in [("coarse", 40.0), ("desk", 20.0)] {
        let cfg = EnvConfig::preset(EnvId::Env1, Profile::Desk);
        let city = cfg.city().expect("preset city builds");
        for exec in [Execution::Sequential, Execution::Parallel] {
            let id = BenchmarkId::new(format!("{exec:?}").to_lowercase(), label);
            group.bench_with_input(id, &cell, |b, &cell| {
                b.iter(|| build_radio_map_with(&city, &cfg.propagation, cfg.mission.altitude, cell, exec).expect("map builds"))
            });
        }
    }
    group.finish();
}

criterion_group!(benches, radio_map);
criterion_main!(benches);
