use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mflab_bench::{bcs_game, paired_point};
use mflab_core::dynamics::{selfconsistent_flow, FlowOptions};
use std::hint::black_box;

/// Ten RK4 steps of the self-consistent flow from a Gibbs state.
fn flow_steps(c: &mut Criterion) {
    let mut group = c.benchmark_group("flow_10_steps");
    group.sample_size(10);
    for l in [0, 1] {
        let game = bcs_game(l, 4.0);
        let rho = game.gibbs(&paired_point()).unwrap();
        let opts = FlowOptions { dt: 1e-3, t_end: 1e-2, record_interval: 1e-2, ..FlowOptions::default() };
        group.bench_with_input(BenchmarkId::from_parameter(l), &l, |b, _| {
            b.iter(|| selfconsistent_flow(game.sparse(), black_box(rho.density()), &opts, &[]).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, flow_steps);
criterion_main!(benches);
