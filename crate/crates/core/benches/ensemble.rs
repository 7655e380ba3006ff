use std::hint::black_box;

use antiito_core::simulate::simulate_ensemble_with;
use antiito_core::{Execution, ModelParams, SimulationConfig};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn ensemble(c: &mut Criterion) {
    let params = ModelParams {
        q: 2.0,
        r: 1.0,
        v: 1.0,
        c: 1.0,
        sigma: 1.0,
    };
    let mut group = c.benchmark_group("ensemble");
    group.sample_size(10);
    for n_paths in [256usize, 2048] {
        let cfg = SimulationConfig {
            dt: 1e-3,
            t_final: 2.0,
            n_paths,
            ..SimulationConfig::default()
        };
        for (name, exec) in [
            ("sequential", Execution::Sequential),
            ("parallel", Execution::Parallel),
        ] {
            group.bench_with_input(BenchmarkId::new(name, n_paths), &cfg, |b, cfg| {
                b.iter(|| black_box(simulate_ensemble_with(cfg, &params, exec).unwrap().mean))
            });
        }
    }
    group.finish();
}

criterion_group!(benches, ensemble);
criterion_main!(benches);
