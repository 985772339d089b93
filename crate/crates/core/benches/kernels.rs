//! Parallel against sequential evaluation of the hot paths.
//!
//! Both arms run the same code; the sequential arm is pinned to a one-thread
//! rayon pool. Built with `--no-default-features` both arms are sequential.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use jlo_core::exec::is_parallel;
use jlo_core::expectations::{expectation_tuple_sum, HeatContext};
use jlo_core::fixtures::{random_even_element, random_odd_perturbation, rng};
use jlo_core::homotopy::{sweep_invariant, DeformationFamily};
use jlo_core::jlo::{PairingInput, PairingOptions};
use jlo_core::linalg::{identity, kron, CMat};
use jlo_core::fixtures::random_triple;

fn pools() -> Vec<(&'static str, rayon::ThreadPool)> {
    let seq = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let par = rayon::ThreadPoolBuilder::new().build().unwrap();
    vec![("sequential", seq), (if is_parallel() { "parallel" } else { "parallel-disabled" }, par)]
}

fn tuple_sum(c: &mut Criterion) {
    let t = random_triple(3, 8, 2);
    let ctx = HeatContext::from_triple(&t).unwrap();
    let mut r = rng(11);
    let verts: Vec<CMat> = (0..6).map(|_| random_even_element(&mut r, &t, 1.0)).collect();
    let mut group = c.benchmark_group("tuple_sum_level5_dim8");
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| pool.install(|| expectation_tuple_sum(&ctx, black_box(&verts), 1, 1.0).unwrap()))
        });
    }
    group.finish();
}

fn sweep(c: &mut Criterion) {
    let t = random_triple(5, 6, 2);
    let dq = random_odd_perturbation(&mut rng(12), &t, 0.3);
    let f = DeformationFamily::linear(t.clone(), dq, (0.0, 1.0));
    let input = PairingInput::new(kron(&identity(1), &t.gamma), 1, 0);
    let grid: Vec<f64> = (0..16).map(|i| i as f64 / 15.0).collect();
    let opts = PairingOptions::default();
    let mut group = c.benchmark_group("sweep_16_points_dim6");
    group.sample_size(10);
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| pool.install(|| sweep_invariant(&f, &input, black_box(&grid), opts).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, tuple_sum, sweep);
criterion_main!(benches);
