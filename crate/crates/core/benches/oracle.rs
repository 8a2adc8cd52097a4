use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use maxgent_core::discrete::IntegerRange;
use maxgent_core::lp::sum_bounds;
use maxgent_core::model::{scale_problem, ProblemInstance};
use maxgent_core::oracle::{enumerate_feasible_with, verify_soundness, GridPoint, DEFAULT_BUDGET};
use maxgent_core::par::Execution;
use maxgent_core::solver::{maximize_g, SolverOptions};

fn network() -> ProblemInstance {
    // x1 + x2 = 12, x2 + x3 <= 18, x3 + x4 = 15
    ProblemInstance::new(
        4,
        vec![vec![1.0, 1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0, 1.0]],
        vec![12.0, 15.0],
        vec![vec![0.0, 1.0, 1.0, 0.0]],
        vec![18.0],
        1.0,
    )
    .unwrap()
}

fn enumeration(c: &mut Criterion) {
    let p = network();
    let range = IntegerRange { n1: 20, n2: 33, n_star: 0 };
    let mut g = c.benchmark_group("enumerate");
    for (name, exec) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
        g.bench_with_input(BenchmarkId::new(name, "delta=0.1"), &exec, |b, &exec| {
            b.iter(|| enumerate_feasible_with(black_box(&p), 0.1, range, DEFAULT_BUDGET, exec).unwrap())
        });
    }
    g.finish();
}

fn soundness(c: &mut Criterion) {
    let base = ProblemInstance::new(
        3,
        vec![vec![1.0, 1.0, 0.0]],
        vec![4.0],
        vec![vec![0.0, 1.0, 1.0]],
        vec![6.0],
        1.0,
    )
    .unwrap();
    let p = scale_problem(&base, 5.0).unwrap();
    let sol = maximize_g(&p, &SolverOptions::default()).unwrap();
    let bounds = sum_bounds(&p).unwrap();
    let grid = [
        GridPoint::Entropy { delta: 0.05, eta: 0.05 },
        GridPoint::Entropy { delta: 0.1, eta: 0.1 },
        GridPoint::Distance { delta: 0.05, theta: 0.3 },
    ];
    let mut g = c.benchmark_group("soundness");
    for (name, exec) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
        g.bench_function(name, |b| {
            b.iter(|| verify_soundness(&p, &sol, &bounds, &grid, DEFAULT_BUDGET, exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, enumeration, soundness);
criterion_main!(benches);
