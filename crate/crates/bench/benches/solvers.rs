use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion};
use rgrk_bench::{config, fixture};
use rgrk_core::theory::spectral_bounds;
use rgrk_core::{solve, Family, Method, Solver};

const STEPS: usize = 100;

fn advance(c: &mut Criterion) {
    let inst = fixture(Family::Dense, 200, 25, 50);
    let mut group = c.benchmark_group("advance_100_steps");
    for method in Method::ALL {
        group.bench_function(BenchmarkId::from_parameter(method), |b| {
            b.iter_batched(
                || Solver::new(&inst.a, &inst.b, vec![&inst.c], config(method)).unwrap(),
                |mut s| {
                    for _ in 0..STEPS {
                        black_box(s.advance().unwrap());
                    }
                    s
                },
                BatchSize::LargeInput,
            )
        });
    }
    group.finish();
}

fn full_solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_60x12x24");
    group.sample_size(10);
    for family in [Family::Dense, Family::Sparse] {
        let inst = fixture(family, 60, 12, 24);
        for method in Method::ALL {
            let id = BenchmarkId::new(family.name(), method);
            group.bench_with_input(id, &inst, |b, inst| {
                b.iter(|| solve(inst, &config(method)).unwrap().final_iter)
            });
        }
    }
    group.finish();
}

fn bounds(c: &mut Criterion) {
    let inst = fixture(Family::Dense, 200, 25, 50);
    c.bench_function("spectral_bounds_200x25x50", |b| {
        b.iter(|| spectral_bounds(black_box(&inst.a), black_box(&inst.b)).unwrap())
    });
}

criterion_group!(benches, advance, full_solve, bounds);
criterion_main!(benches);
