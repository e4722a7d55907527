//! Throughput of the Gaussian integration kernel, the exact record laws built
//! on it, and the path simulator.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use recordlab::mvn::{mvn_cdf, MvnProblem};
use recordlab::records::{joint_record_cdf, record_probability, CorrelationModel};
use recordlab::simulate::{simulate_records, Process};
use recordlab::{CorrMatrix, Numerics, SimStudy};
use std::hint::black_box;

fn ar1_matrix(dim: usize, phi: f64) -> CorrMatrix {
    CorrelationModel::ar1(phi).unwrap().matrix(dim).unwrap()
}

fn mvn(c: &mut Criterion) {
    let mut g = c.benchmark_group("mvn_orthant");
    g.sample_size(10);
    for dim in [2, 5, 10, 20] {
        let p = MvnProblem::orthant(vec![0.5; dim], ar1_matrix(dim, 0.5)).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(dim), &p, |b, p| b.iter(|| mvn_cdf(black_box(p), 1e-4, 1).unwrap()));
    }
    g.finish();
}

fn records(c: &mut Criterion) {
    let model = CorrelationModel::ar1(0.5).unwrap();
    let num = Numerics::with_seed(1).with_tol(1e-4);
    let mut g = c.benchmark_group("record_probability");
    g.sample_size(10);
    for n in [5, 10, 20] {
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| b.iter(|| record_probability(&model, n, &num).unwrap()));
    }
    g.finish();
    let mut g = c.benchmark_group("joint_record_cdf");
    g.sample_size(10);
    g.bench_function("j3_n8", |b| b.iter(|| joint_record_cdf(&model, 3, 8, 0.5, 1.0, &num).unwrap()));
    g.finish();
}

fn simulate(c: &mut Criterion) {
    let mut g = c.benchmark_group("simulate_records");
    g.sample_size(10);
    let gauss = SimStudy::new(Process::Gaussian(CorrelationModel::ar1(0.5).unwrap()), 100, 10_000, 1).unwrap();
    g.bench_function("ar1_n100_10k", |b| b.iter(|| simulate_records(&gauss).unwrap()));
    let chernick = SimStudy::new(Process::Chernick { m: 2 }, 1000, 10_000, 1).unwrap();
    g.bench_function("chernick_n1000_10k", |b| b.iter(|| simulate_records(&chernick).unwrap()));
    g.finish();
}

criterion_group!(benches, mvn, records, simulate);
criterion_main!(benches);
