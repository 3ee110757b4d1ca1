use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use phasecell::chain::{brute_force_chain, misclassification, ChainParams};
use phasecell::par::{par_map, seq_map};
use phasecell::random::{random_model, rng_from_seed, RandomModelShape};

fn sweep_grid() -> Vec<ChainParams> {
    let mut grid = Vec::new();
    for l in (100..=4000).step_by(100) {
        for k in 1..=8 {
            let m = k as f64 / 8.0;
            for j in [0.6, 0.9, 1.2] {
                grid.push(ChainParams::new(l, m, j).unwrap());
            }
        }
    }
    grid
}

fn dense_grid() -> Vec<ChainParams> {
    let mut grid = Vec::new();
    for l in 1..=3 {
        for k in 1..=4 {
            grid.push(ChainParams::new(l, k as f64 / 4.0, 1.1).unwrap());
        }
    }
    grid
}

fn bench_closed_form(c: &mut Criterion) {
    let grid = sweep_grid();
    let mut group = c.benchmark_group("closed_form_sweep");
    group.bench_function(BenchmarkId::new("sequential", grid.len()), |b| {
        b.iter(|| seq_map(black_box(&grid), misclassification))
    });
    group.bench_function(BenchmarkId::new("parallel", grid.len()), |b| {
        b.iter(|| par_map(black_box(&grid), misclassification))
    });
    group.finish();
}

fn bench_f_tensor(c: &mut Criterion) {
    let models: Vec<_> = (0..32u64)
        .map(|seed| {
            let shape = RandomModelShape { n: 3, dim_k: 6, cells: 3, coupling_scale: 1.0 };
            random_model(&mut rng_from_seed(seed), shape)
        })
        .collect();
    let mut group = c.benchmark_group("f_tensor");
    group.bench_function("sequential", |b| b.iter(|| seq_map(black_box(&models), |m| m.compute_f_tensor(1.0))));
    group.bench_function("parallel", |b| b.iter(|| par_map(black_box(&models), |m| m.compute_f_tensor(1.0))));
    group.finish();
}

fn bench_dense(c: &mut Criterion) {
    let grid = dense_grid();
    let mut group = c.benchmark_group("dense_chain");
    group.sample_size(10);
    group.bench_function("sequential", |b| b.iter(|| seq_map(black_box(&grid), |p| brute_force_chain(p).unwrap())));
    group.bench_function("parallel", |b| b.iter(|| par_map(black_box(&grid), |p| brute_force_chain(p).unwrap())));
    group.finish();
}

criterion_group!(benches, bench_closed_form, bench_f_tensor, bench_dense);
criterion_main!(benches);
