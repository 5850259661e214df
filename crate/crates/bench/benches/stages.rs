use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fraccap_core::{
    build_coefficients, solve_weights, CorrectionSet, Integrator, ManufacturedSolution, Misfit, ObservedData, TimeGrid,
};

fn stencil(c: &mut Criterion) {
    let mut group = c.benchmark_group("stencil");
    for steps in [256usize, 1024, 4096] {
        let grid = TimeGrid::covering(1.0, steps).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(steps), &grid, |b, g| {
            b.iter(|| build_coefficients(black_box(0.5), g).unwrap())
        });
    }
    group.finish();
}

fn weights(c: &mut Criterion) {
    let grid = TimeGrid::covering(1.0, 1024).unwrap();
    let coeffs = build_coefficients(0.5, &grid).unwrap();
    c.bench_function("weights/m3_n1024", |b| {
        b.iter(|| -> CorrectionSet { solve_weights(black_box(&[0.1, 0.3, 0.5]), &coeffs).unwrap() })
    });
}

fn integrate(c: &mut Criterion) {
    let solution = ManufacturedSolution::power_sum(vec![0.1, 0.3], vec![0.5]).unwrap();
    let problem = solution.problem().unwrap();
    let mut group = c.benchmark_group("integrate");
    group.sample_size(20);
    for steps in [256usize, 1024] {
        let grid = TimeGrid::covering(1.0, steps).unwrap();
        let integrator = Integrator::new(&problem, &grid).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(steps), &integrator, |b, it| {
            b.iter(|| it.solve(black_box(&[0.1, 0.3])).unwrap())
        });
    }
    group.finish();
}

fn capture_gradient(c: &mut Criterion) {
    let solution = ManufacturedSolution::power_sum(vec![0.1, 0.3], vec![0.5]).unwrap();
    let data = ObservedData::from_manufactured(&solution, TimeGrid::new(0.01, 100).unwrap()).unwrap();
    let misfit = Misfit::new(&data, &[0.5]).unwrap();
    c.bench_function("misfit_gradient/m2_n100", |b| {
        b.iter(|| misfit.value_and_gradient(black_box(&[0.15, 0.35]), 1e-14).unwrap())
    });
}

criterion_group!(benches, stencil, weights, integrate, capture_gradient);
criterion_main!(benches);
