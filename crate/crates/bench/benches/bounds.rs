use clusterbell::{
    classical_bound, cluster4_polynomial, full_group, mabk4_polynomial, make_w4, optimize_settings,
    stabilizer_sum_polynomial, GraphSpec, OptimizerConfig, DEFAULT_GROUP_LIMIT,
};
use criterion::{criterion_group, criterion_main, Criterion};

fn bench_classical(c: &mut Criterion) {
    let g = "1d:4".parse::<GraphSpec>().unwrap().build().unwrap();
    let stabsum = stabilizer_sum_polynomial(&full_group(&g, DEFAULT_GROUP_LIMIT).unwrap()).unwrap();
    let mut group = c.benchmark_group("classical_bound");
    group.bench_function("mabk4", |b| b.iter(|| classical_bound(&mabk4_polynomial()).unwrap()));
    group.bench_function("stabsum", |b| b.iter(|| classical_bound(&stabsum).unwrap()));
    group.finish();
}

fn bench_optimizer(c: &mut Criterion) {
    let p = cluster4_polynomial();
    let w4 = make_w4();
    let config = OptimizerConfig {
        restarts: 8,
        ..OptimizerConfig::default()
    };
    let mut group = c.benchmark_group("optimizer");
    group.sample_size(10);
    group.bench_function("cluster4/w4", |b| {
        b.iter(|| optimize_settings(&p, &w4, &config).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_classical, bench_optimizer);
criterion_main!(benches);
