use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use depcast_core::broadcast_sim::{
    simulate_b_equiset, simulate_b_equiset_edf, simulate_ignore_deps, Baseline, InnerPolicy,
};
use depcast_core::oracle::{brute_force_bopt, greedy_upper_bound, SearchLimits, DEFAULT_BUDGET};
use depcast_core::workloads::{gen_fact1_adversarial, gen_figure1, gen_random_correlated, RandomParams};
use depcast_core::{rat, Rational};

fn equiset(c: &mut Criterion) {
    let mut g = c.benchmark_group("b_equiset");
    for requests in [10, 40, 160] {
        let inst = gen_random_correlated(&RandomParams {
            n_items: 8,
            n_requests: requests,
            max_set: 4,
            horizon: Rational::from(requests as i64 / 2),
            seed: 1,
            ..RandomParams::default()
        })
        .unwrap();
        g.bench_with_input(BenchmarkId::new("equi", requests), &inst, |b, inst| {
            b.iter(|| simulate_b_equiset(black_box(inst), &rat(3, 2), &InnerPolicy::EquiWithin).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("edf", requests), &inst, |b, inst| {
            b.iter(|| simulate_b_equiset_edf(black_box(inst), &Rational::one(), &Rational::one()).unwrap())
        });
    }
    g.finish();
}

fn baselines(c: &mut Criterion) {
    let mut g = c.benchmark_group("ignore_deps");
    for n in [16, 64] {
        let inst = gen_fact1_adversarial(n, &Rational::one(), &Baseline::EquiPerItem).unwrap().instance;
        g.bench_with_input(BenchmarkId::new("equi_per_item", n), &inst, |b, inst| {
            b.iter(|| simulate_ignore_deps(black_box(inst), &Rational::one(), &Baseline::EquiPerItem).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("round_robin", n), &inst, |b, inst| {
            b.iter(|| simulate_ignore_deps(black_box(inst), &Rational::one(), &Baseline::default()).unwrap())
        });
    }
    g.finish();
}

fn oracle(c: &mut Criterion) {
    let fig = gen_figure1();
    c.bench_function("oracle/figure1", |b| {
        b.iter(|| brute_force_bopt(black_box(&fig), &rat(1, 2), 28, SearchLimits { budget: DEFAULT_BUDGET }).unwrap())
    });
    let adv = gen_fact1_adversarial(36, &Rational::one(), &Baseline::EquiPerItem).unwrap().instance;
    c.bench_function("greedy/fact1_n36", |b| b.iter(|| greedy_upper_bound(black_box(&adv)).unwrap()));
}

criterion_group!(benches, equiset, baselines, oracle);
criterion_main!(benches);
