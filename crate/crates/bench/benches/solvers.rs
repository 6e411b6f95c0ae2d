use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nsprox_bench::{pca_problem, uniform_start};
use nsprox_core::{solve, Algorithm, OutputMode, SolverConfig};

/// Full runs at small budgets, one trace point at the end.
fn solver_runs(c: &mut Criterion) {
    let (dim, samples) = (50, 2000);
    let problem = pca_problem(dim, samples);
    let start = uniform_start(dim);
    let mut group = c.benchmark_group("solve");
    group.sample_size(10);
    for (algorithm, budget) in
        [(Algorithm::Mbspa, 200), (Algorithm::Vrspa, 500), (Algorithm::Vrspa2, 500), (Algorithm::Baseline, 20)]
    {
        let config = SolverConfig::new(algorithm, budget).with_seed(7).with_mode(OutputMode::Trace);
        let config = SolverConfig { trace_every: budget, ..config };
        group.bench_function(BenchmarkId::new(algorithm.name(), budget), |b| {
            b.iter(|| solve(&problem, &config, Some(&start)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, solver_runs);
criterion_main!(benches);
