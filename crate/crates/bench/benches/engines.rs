use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rsp_bench::{scenarios, sme_config};
use rsp_core::engines::{
    ensemble_mean, integrate_ode, linear_trajectory_sample, simulate_trajectory,
};
use rsp_core::BlochVector;

fn ode(c: &mut Criterion) {
    let mut g = c.benchmark_group("ode_t5_dt1e-3");
    for (name, p) in scenarios() {
        g.bench_function(name, |b| {
            b.iter(|| integrate_ode(black_box(&p), BlochVector::ORIGIN, 5.0, 1e-3).unwrap())
        });
    }
    g.finish();
}

fn trajectory(c: &mut Criterion) {
    let cfg = sme_config();
    let mut g = c.benchmark_group("sme_trajectory_t2");
    for (name, p) in scenarios() {
        g.bench_function(name, |b| {
            let mut seed = 0;
            b.iter(|| {
                seed += 1;
                simulate_trajectory(black_box(&p), &cfg, seed, 2.0).unwrap()
            })
        });
    }
    g.finish();
}

fn ensemble(c: &mut Criterion) {
    let cfg = sme_config();
    let mut g = c.benchmark_group("sme_ensemble_t1");
    g.sample_size(10);
    let (_, p) = &scenarios()[1];
    for n in [64, 256] {
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| ensemble_mean(p, &cfg, n, 1.0, 7).unwrap())
        });
    }
    g.finish();
}

fn linear(c: &mut Criterion) {
    c.bench_function("linear_mc_1e4_three_times", |b| {
        b.iter(|| linear_trajectory_sample(1.0, &[0.5, 1.0, 2.0], 10_000, black_box(3)).unwrap())
    });
}

criterion_group!(benches, ode, trajectory, ensemble, linear);
criterion_main!(benches);
