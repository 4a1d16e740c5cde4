use std::hint::black_box;

use coreq::gen::{generate_problems, GenConfig};
use coreq::par::Execution;
use coreq::search::{evaluate, SearchLimits, StrategySpec};
use criterion::{criterion_group, criterion_main, Criterion};

fn batch_evaluation(c: &mut Criterion) {
    let cfg = GenConfig {
        max_depth: 5,
        count: 200,
        seed: 1,
        solve_budget: 2000,
        ..GenConfig::default()
    };
    let problems: Vec<_> = generate_problems(&cfg, Execution::Parallel)
        .expect("generation")
        .into_iter()
        .enumerate()
        .map(|(i, g)| (i + 1, g.sequent))
        .collect();
    let limits = SearchLimits::new(2000, 64);

    let mut group = c.benchmark_group("evaluate_200_baseline");
    group.sample_size(10);
    for exec in [Execution::Sequential, Execution::Parallel] {
        group.bench_function(exec.to_string(), |b| {
            b.iter(|| black_box(evaluate(&problems, &StrategySpec::Baseline, limits, 0, exec)))
        });
    }
    group.finish();

    let mut group = c.benchmark_group("generate_100");
    group.sample_size(10);
    let small = GenConfig {
        count: 100,
        ..GenConfig::default()
    };
    for exec in [Execution::Sequential, Execution::Parallel] {
        group.bench_function(exec.to_string(), |b| b.iter(|| black_box(generate_problems(&small, exec))));
    }
    group.finish();
}

criterion_group!(benches, batch_evaluation);
criterion_main!(benches);
