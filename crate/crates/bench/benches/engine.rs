// SPDX-License-Identifier: Apache-2.0

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use upex_bench::{envelope_engine, poisson_engine, ring_matrix, start_at_zero};
use upex_core::fidi::{evaluate_upper, hitting_family, jump_gamble};
use upex_core::oracle::precise_exponential;
use upex_core::semigroup::selection_dp;
use upex_core::{Gamble, StateSpace};

fn exponential(c: &mut Criterion) {
    let mut group = c.benchmark_group("exponential_apply");
    for n in [4usize, 16, 64] {
        let engine = envelope_engine(n, 3);
        let f = Gamble::from_fn(engine.generator().space(), |x| (x as f64 * 0.7).sin()).unwrap();
        group.bench_with_input(BenchmarkId::new("envelope", n), &f, |b, f| {
            b.iter(|| engine.exponential_apply(black_box(0.5), f).unwrap())
        });
    }
    for levels in [50usize, 200] {
        let engine = poisson_engine(levels);
        let f = Gamble::from_fn(engine.generator().space(), |z| (z as f64).min(10.0)).unwrap();
        group.bench_with_input(BenchmarkId::new("poisson", levels), &f, |b, f| {
            b.iter(|| engine.exponential_apply(black_box(0.5), f).unwrap())
        });
    }
    group.finish();
}

fn oracles(c: &mut Criterion) {
    let q = ring_matrix(6, 0.0);
    let f = Gamble::indicator(&StateSpace::indexed(6).unwrap(), 2);
    c.bench_function("precise_exponential/6", |b| {
        b.iter(|| precise_exponential(&q, black_box(1.0), &f).unwrap())
    });
    let mats: Vec<_> = (0..3).map(|k| ring_matrix(3, k as f64)).collect();
    let g = Gamble::new(vec![0.1, -0.4, 0.9]).unwrap();
    c.bench_function("selection_dp/3x3", |b| {
        b.iter(|| selection_dp(&mats, 0.05, black_box(6), &g).unwrap())
    });
}

fn recursion(c: &mut Criterion) {
    let engine = poisson_engine(40);
    let e0 = start_at_zero(&engine);
    let d = jump_gamble(engine.generator().space(), 0.5, 0.6).unwrap();
    c.bench_function("evaluate_upper/poisson jump", |b| {
        b.iter(|| evaluate_upper(&e0, &engine, &d).unwrap())
    });

    let two = envelope_engine(2, 2);
    let e0 = start_at_zero(&two);
    let space = two.generator().space().clone();
    let family = hitting_family(&space, 1, 0.7);
    let mut group = c.benchmark_group("evaluate_upper/hitting");
    group.sample_size(10);
    for level in [4usize, 8] {
        let h = family(level).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(level), &h, |b, h| {
            b.iter(|| evaluate_upper(&e0, &two, h).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, exponential, oracles, recursion);
criterion_main!(benches);
