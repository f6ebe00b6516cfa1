use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use maxcsp_core::fourier::walsh_transform;
use maxcsp_core::instance::{brute_force, planted_instance, random_instance};
use maxcsp_core::measure::{find_pairwise_independent, Measure};
use maxcsp_core::sdp::{build_gram_objective, homogenize, solve_gram, SdpOptions};
use maxcsp_core::separate::separating_quadratic;
use maxcsp_core::{predicates, Predicate};

fn walsh(c: &mut Criterion) {
    let mut group = c.benchmark_group("walsh");
    for k in [4usize, 8, 12] {
        let table: Vec<f64> = (0..1usize << k).map(|x| ((x * 2654435761) % 7) as f64).collect();
        group.bench_with_input(BenchmarkId::from_parameter(k), &table, |b, t| {
            b.iter(|| walsh_transform(black_box(t)).unwrap())
        });
    }
    group.finish();
}

fn separator(c: &mut Criterion) {
    let mut group = c.benchmark_group("separator");
    let cases = [("glst", predicates::glst()), ("nae4", predicates::nae(4)), ("random5", Predicate::from_bits(5, 0x9e37_79b9).unwrap())];
    for (name, p) in &cases {
        group.bench_with_input(BenchmarkId::new("pairwise-lp", name), p, |b, p| {
            b.iter(|| find_pairwise_independent(black_box(p)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("margin-lp", name), p, |b, p| {
            b.iter(|| separating_quadratic(black_box(p)).unwrap())
        });
    }
    group.finish();
}

fn sdp(c: &mut Criterion) {
    let mut group = c.benchmark_group("sdp");
    group.sample_size(10);
    let p = predicates::glst();
    let q = separating_quadratic(&p).unwrap().unwrap().quadratic;
    let hq = homogenize(&q, &p).unwrap();
    let mu = Measure::uniform_on(4, &p.accepted()).unwrap();
    for n in [20usize, 40, 80] {
        let inst = planted_instance(&mu, n, 50 * n, 0.05, 1).unwrap();
        let m = build_gram_objective(&inst, &hq).unwrap();
        group.bench_with_input(BenchmarkId::new("mixing", n), &m, |b, m| {
            b.iter(|| solve_gram(black_box(m), &SdpOptions::default()).unwrap())
        });
    }
    group.finish();
}

fn brute(c: &mut Criterion) {
    let mut group = c.benchmark_group("brute-force");
    group.sample_size(10);
    let obj = predicates::nae(3).as_poly();
    for n in [12usize, 16, 20] {
        let inst = random_instance(3, n, 4 * n, true, 7).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &inst, |b, inst| {
            b.iter(|| brute_force(&obj, black_box(inst)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, walsh, separator, sdp, brute);
criterion_main!(benches);
