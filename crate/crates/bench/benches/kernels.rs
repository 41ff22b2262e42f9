use criterion::{criterion_group, criterion_main, Criterion};
use netbell_bench::{dense_lp, ejm_strategy, elegant_triangle, ghz_covariance};
use netbell_core::covariance::{decompose, DykstraOptions};
use netbell_core::inflation::{test_compatibility, CompatibilityOptions, InflationSpec};
use netbell_core::quantum::born;
use netbell_core::{lp, zoo, Network};
use std::hint::black_box;

fn born_rule(c: &mut Criterion) {
    let bilocal = ejm_strategy();
    let triangle = elegant_triangle();
    c.bench_function("born/bilocal_ejm", |b| b.iter(|| born(black_box(&bilocal)).unwrap()));
    c.bench_function("born/triangle_elegant", |b| b.iter(|| born(black_box(&triangle)).unwrap()));
}

fn simplex(c: &mut Criterion) {
    let p = dense_lp(60, 30);
    c.bench_function("simplex/dense_60x30", |b| b.iter(|| lp::solve(black_box(&p)).unwrap()));
    let net = Network::triangle(2);
    let spec = InflationSpec::preset("cut", &net).unwrap();
    let ghz = zoo::ghz();
    c.bench_function("inflation/cut_ghz", |b| {
        b.iter(|| test_compatibility(black_box(&ghz), &net, &spec, CompatibilityOptions::default()).unwrap())
    });
}

fn dykstra(c: &mut Criterion) {
    let (cov, net, coords) = ghz_covariance();
    let opts = DykstraOptions { tol: 1e-8, max_iter: 1000 };
    c.bench_function("dykstra/ghz_1000_iters", |b| b.iter(|| decompose(black_box(&cov), &net, &coords, opts).unwrap()));
}

criterion_group!(benches, born_rule, simplex, dykstra);
criterion_main!(benches);
