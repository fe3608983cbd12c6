use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use hypoflag::corpus;
use hypoflag::exec::Execution;
use hypoflag::filtersim::{run_batch, SimConfig};
use hypoflag::hormander::{generate_lie_span, model_generators, sample_points, Mode, SpanOptions};

const STRATEGIES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn bracket_candidates(c: &mut Criterion) {
    let mut group = c.benchmark_group("bracket_candidates");
    group.sample_size(10);
    for (big_n, big_k) in [(4, 2), (5, 2)] {
        let spec = corpus::multi_coordinate_detection(big_n, big_k, 1, 1);
        let gens = model_generators(&spec, Mode::Detection).unwrap();
        let points = sample_points(spec.n, 5, 0);
        for (label, execution) in STRATEGIES {
            let opts = SpanOptions { exhaustive: true, execution, ..SpanOptions::default() };
            group.bench_with_input(BenchmarkId::new(label, format!("N{big_n}K{big_k}")), &opts, |b, opts| {
                b.iter(|| generate_lie_span(black_box(&gens), 2, &points, opts).unwrap())
            });
        }
    }
    group.finish();
}

fn monte_carlo_paths(c: &mut Criterion) {
    let mut group = c.benchmark_group("monte_carlo_paths");
    group.sample_size(10);
    for (name, spec) in
        [("three-drifts", corpus::testing_three_drifts()), ("regime-tracking", corpus::regime_tracking())]
    {
        for (label, execution) in STRATEGIES {
            let mut cfg = SimConfig::uniform(1.0, 1e-3, 1000, 7, spec.n + 1);
            cfg.execution = execution;
            group.bench_with_input(BenchmarkId::new(label, name), &cfg, |b, cfg| {
                b.iter(|| run_batch(black_box(&spec), cfg).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, bracket_candidates, monte_carlo_paths);
criterion_main!(benches);
