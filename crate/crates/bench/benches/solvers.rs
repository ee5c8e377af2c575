use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use stacklab::facets::{default_eps_grid, sensitivity_constant};
use stacklab::{equiv_class, run_simulation, solve_exact, LearnerSpec, OptimizerSpec};
use stacklab_bench::random_game;

fn bench_solve_exact(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_exact");
    for size in [2, 3, 5, 8] {
        let game = random_game(size, size, 11);
        group.bench_with_input(BenchmarkId::from_parameter(size), &game, |b, g| {
            b.iter(|| solve_exact(black_box(g)).unwrap())
        });
    }
    group.finish();
}

fn bench_sensitivity(c: &mut Criterion) {
    let mut group = c.benchmark_group("sensitivity_constant");
    let grid = default_eps_grid();
    for size in [2, 3, 4] {
        let game = random_game(size, size, 5);
        let rows = equiv_class(game.b(), 0).unwrap().columns().transpose();
        group.bench_with_input(BenchmarkId::from_parameter(size), &rows, |b, m| {
            b.iter(|| sensitivity_constant(black_box(m), &grid).unwrap())
        });
    }
    group.finish();
}

fn bench_simulation(c: &mut Criterion) {
    let game = random_game(3, 3, 3);
    let learner = LearnerSpec::Kl { eta0: 1.0, noise: 0.05, y_init: None };
    let mut group = c.benchmark_group("simulation_10k");
    group.sample_size(20);
    let optimizers = [
        ("paal", OptimizerSpec::Paal { d: 0.01 }),
        ("pamd", OptimizerSpec::Pamd { k: 50, margin: 0.02, slack: None, learner_eta0: 1.0 }),
    ];
    for (name, opt) in optimizers {
        // PAAL is defined for two optimizer actions.
        let g = if name == "paal" { random_game(2, 2, 4) } else { game.clone() };
        group.bench_function(name, |b| {
            b.iter(|| run_simulation(&g, &opt, &learner, 10_000, 0, 1_000).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_solve_exact, bench_sensitivity, bench_simulation);
criterion_main!(benches);
