//! Criterion benchmarks for the hot paths: single-root Newton polish,
//! multi-start enumeration, one continuation sweep, and time integration.

use criterion::{criterion_group, criterion_main, Criterion};
use num_complex::Complex64;
use std::hint::black_box;
use tcqpt_core::dynamics::{integrate, Controls};
use tcqpt_core::model::gain_balance_rate;
use tcqpt_core::steady::{continue_branch, find_all, solve_from, ContinuationOptions, GridSpec};
use tcqpt_core::{MeanFieldState, ModelParams, Regime};

fn gain_balanced(lambda: f64) -> ModelParams {
    let mut params = ModelParams {
        delta_c: 8.0,
        delta_s: 8.0,
        lambda,
        kappa_c: 1.0,
        gamma_perp: 1.0,
        gamma_par: 0.1,
        ..ModelParams::default()
    };
    params.kappa_g = gain_balance_rate(&params).unwrap();
    params
        .with_matched_drives(Regime::GainBalanced, Complex64::new(1.0, 0.0))
        .unwrap()
}

fn lossy_mismatched(factor: f64) -> ModelParams {
    let mut params = ModelParams {
        delta_c: 8.0,
        delta_s: 8.0,
        lambda: 8.0,
        kappa_c: 1.0,
        gamma_perp: 1.0,
        gamma_par: 0.1,
        ..ModelParams::default()
    }
    .with_matched_drives(Regime::Lossy, Complex64::new(1.0, 0.0))
    .unwrap();
    params.omega_j /= factor;
    params
}

fn bench_solve_from(c: &mut Criterion) {
    let params = gain_balanced(2.0 * 65.0_f64.sqrt());
    let seed = MeanFieldState::trivial(&params).with_jm_seed(0.3);
    c.bench_function("solve_from superradiant", |b| {
        b.iter(|| solve_from(black_box(&params), black_box(&seed)).unwrap())
    });
}

fn bench_find_all(c: &mut Criterion) {
    let params = lossy_mismatched(0.77);
    let grid = GridSpec::default();
    c.bench_function("find_all mismatched", |b| {
        b.iter(|| find_all(black_box(&params), black_box(&grid)).unwrap())
    });
}

fn bench_continuation(c: &mut Criterion) {
    let params = gain_balanced(2.0 * 65.0_f64.sqrt());
    let seed = solve_from(&params, &MeanFieldState::trivial(&params).with_jm_seed(0.3)).unwrap();
    c.bench_function("continue_branch lambda window", |b| {
        b.iter(|| {
            let base = params.clone();
            continue_branch(
                "lambda",
                move |l| {
                    let mut p = base.clone();
                    p.lambda = l;
                    p
                },
                (params.lambda, 1.1 * params.lambda),
                black_box(&seed),
                &ContinuationOptions::default(),
            )
            .unwrap()
        })
    });
}

fn bench_integrate(c: &mut Criterion) {
    let params = lossy_mismatched(1.0);
    let start = MeanFieldState::trivial(&params).with_jm_seed(0.2);
    let controls = Controls::default();
    c.bench_function("integrate horizon 5", |b| {
        b.iter(|| integrate(black_box(&params), black_box(&start), 5.0, &controls).unwrap())
    });
}

criterion_group!(
    benches,
    bench_solve_from,
    bench_find_all,
    bench_continuation,
    bench_integrate
);
criterion_main!(benches);
