//! Benchmark fixtures and groups, shared by the `kernels` bench target.

use std::hint::black_box;

use cbo_core::{
    cbo_step, cma_update, evaluate_population, generate_environment, sample_gaussian_population, softmax_weights,
    CboParams, ControlTrajectory, EnvGenConfig, GaussianSearchState, NoiseMode, PointMassEnv, Population, RngStream,
    SoftmaxConfig,
};
use criterion::{BenchmarkId, Criterion, Throughput};

/// Population size and dimension of the tunnel benchmark.
pub const TUNNEL_N: usize = 1000;
pub const TUNNEL_DIM: usize = 200;

pub fn tunnel_env() -> PointMassEnv {
    generate_environment(&EnvGenConfig::canonical(0)).expect("canonical layout generates")
}

/// Evaluated Gaussian population on the tunnel problem.
pub fn tunnel_population(env: &PointMassEnv, n: usize) -> Population {
    let rng = RngStream::new(7);
    let pop = Population::gaussian(&ControlTrajectory::zeros(env.dim()), 1.0, n, &rng).expect("valid shape");
    evaluate_population(env, pop).expect("finite costs")
}

pub fn cbo_params(mode: NoiseMode) -> CboParams {
    CboParams {
        lambda: 1.0,
        sigma0: 0.5,
        dt: 0.1,
        sigma_decay: 1.0,
        noise_mode: mode,
        softmax: SoftmaxConfig::new(1.0).expect("positive rho"),
        rho_final: None,
    }
}

fn rollout(c: &mut Criterion) {
    let env = tunnel_env();
    let u = vec![0.3; env.dim()];
    c.bench_function("tunnel_rollout", |b| b.iter(|| cbo_core::point_mass_rollout(black_box(&u), &env)));
}

fn weights(c: &mut Criterion) {
    let mut group = c.benchmark_group("softmax_weights");
    for n in [100usize, 1000, 10_000] {
        let mut r = RngStream::new(1).at(0, 0);
        let costs: Vec<f64> = (0..n).map(|_| r.uniform(0.0, 1e3)).collect();
        let cfg = SoftmaxConfig::new(0.1).expect("positive rho");
        group.throughput(Throughput::Elements(n as u64));
        group.bench_with_input(BenchmarkId::from_parameter(n), &costs, |b, costs| {
            b.iter(|| softmax_weights(black_box(costs), cfg))
        });
    }
    group.finish();
}

fn steps(c: &mut Criterion) {
    let env = tunnel_env();
    let pop = tunnel_population(&env, TUNNEL_N);
    let rng = RngStream::new(3);
    let mut group = c.benchmark_group("tunnel_step");
    group.sample_size(20);
    for (name, mode) in [("cbo_isotropic", NoiseMode::Isotropic), ("cbo_anisotropic", NoiseMode::Anisotropic)] {
        let params = cbo_params(mode);
        group.bench_function(name, |b| b.iter(|| cbo_step(black_box(&pop), &params, &rng)));
    }
    group.bench_function("evaluate", |b| {
        b.iter(|| evaluate_population(&env, black_box(pop.clone())))
    });
    let state = GaussianSearchState::isotropic(ControlTrajectory::zeros(TUNNEL_DIM), 1.0, 100).expect("valid state");
    group.bench_function("gaussian_sample", |b| {
        b.iter(|| sample_gaussian_population(black_box(&state), TUNNEL_N, 0, &rng))
    });
    let softmax = SoftmaxConfig::new(0.1).expect("positive rho");
    let dense = cma_update(&state, &pop, 0.1, softmax).expect("valid update");
    group.bench_function("cma_update", |b| b.iter(|| cma_update(black_box(&state), &pop, 0.1, softmax)));
    group.bench_function("dense_sample", |b| {
        b.iter(|| sample_gaussian_population(black_box(&dense), TUNNEL_N, 0, &rng))
    });
    group.finish();
}

pub fn benchmarks(c: &mut Criterion) {
    rollout(c);
    weights(c);
    steps(c);
}
