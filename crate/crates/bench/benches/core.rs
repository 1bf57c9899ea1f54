use std::hint::black_box;

use bethe_core::bp::{run_bp, BPConfig, MessageSet, ScheduleKind};
use bethe_core::exact::transfer_matrix_grid;
use bethe_core::fixedpoints::enumerate_fixed_points;
use bethe_core::model::{build_grid, make_ising};
use bethe_core::stability::{bp_jacobian, eigenvalues};
use bethe_core::{IsingModel, ParamSpec};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn grid(rows: usize, scale: f64, seed: u64) -> IsingModel {
    let spec = ParamSpec::UniformRandom { lo: -scale, hi: scale };
    make_ising(build_grid(rows, rows, false).unwrap(), &spec, &spec, seed).unwrap()
}

fn bench_bp(c: &mut Criterion) {
    let mut group = c.benchmark_group("run_bp");
    let m = grid(10, 0.5, 1);
    let init = MessageSet::uniform(m.graph().directed_count());
    for kind in [ScheduleKind::Synchronous, ScheduleKind::RoundRobin, ScheduleKind::Rbp, ScheduleKind::Nibp] {
        let cfg = BPConfig { max_iterations: 200, ..BPConfig::default() }.with_schedule(kind);
        group.bench_with_input(BenchmarkId::from_parameter(format!("{kind:?}")), &cfg, |b, cfg| {
            b.iter(|| run_bp(black_box(&m), cfg, &init).unwrap())
        });
    }
    group.finish();
}

fn bench_enumerate(c: &mut Criterion) {
    let m = grid(3, 2.0, 2);
    c.bench_function("enumerate_fixed_points/3x3", |b| {
        b.iter(|| enumerate_fixed_points(black_box(&m), 100, 0).unwrap())
    });
}

fn bench_eigen(c: &mut Criterion) {
    let mut group = c.benchmark_group("jacobian_spectrum");
    for rows in [4, 6, 8] {
        let m = grid(rows, 1.0, 3);
        let nu = MessageSet::random(m.graph().directed_count(), 3).to_reparam();
        group.bench_with_input(BenchmarkId::from_parameter(rows), &nu, |b, nu| {
            b.iter(|| eigenvalues(&bp_jacobian(black_box(&m), nu)).unwrap())
        });
    }
    group.finish();
}

fn bench_transfer(c: &mut Criterion) {
    let mut group = c.benchmark_group("transfer_matrix");
    for rows in [6, 8, 10] {
        let m = grid(rows, 1.0, 4);
        group.bench_with_input(BenchmarkId::from_parameter(rows), &m, |b, m| {
            b.iter(|| transfer_matrix_grid(black_box(m), rows, rows).unwrap())
        });
    }
    group.finish();
}

criterion_group!(
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = bench_bp, bench_enumerate, bench_eigen, bench_transfer
);
criterion_main!(benches);
