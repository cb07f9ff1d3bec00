use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use screenlab::checks::reference_model;
use screenlab::exec::Execution;
use screenlab::noise::Family;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn sweep(c: &mut Criterion) {
    let m = reference_model(Family::Normal).unwrap();
    let grid = m.precision_grid(0.8, 100.0, 60).unwrap();
    let mut g = c.benchmark_group("sweep_60");
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &e| b.iter(|| m.sweep(&grid, e).unwrap()));
    }
    g.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let m = reference_model(Family::Normal).unwrap();
    let eq = m.solve(0.5).unwrap();
    let mut g = c.benchmark_group("monte_carlo_200k");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &e| {
            b.iter(|| m.monte_carlo_welfare(&eq, 200_000, 42, e).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, sweep, monte_carlo);
criterion_main!(benches);
