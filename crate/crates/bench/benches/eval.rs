use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use pubshare_core::eval::{exact_scs_consumers, exact_unanimous_value, mc_estimate};
use pubshare_core::mechanisms::{cec_shares, scs_schedule};
use pubshare_core::neural::{porf_cost, sample_batch, NetworkParams};
use pubshare_core::{Objective, ValuationDistribution};
use rand::SeedableRng;

fn evaluators(c: &mut Criterion) {
    let uniform = ValuationDistribution::uniform();
    let scs = scs_schedule(10).unwrap();

    let mut g = c.benchmark_group("eval");
    g.sample_size(10);
    g.bench_function("mc scs n=10 1e5 samples", |b| {
        b.iter(|| mc_estimate(&scs, black_box(&uniform), 100_000, 1, Objective::Consumers).unwrap())
    });
    g.bench_function("exact scs consumers n=10", |b| b.iter(|| exact_scs_consumers(black_box(&uniform), 10).unwrap()));
    g.bench_function("exact cec welfare n=1000", |b| {
        b.iter(|| exact_unanimous_value(&cec_shares(1000), black_box(&uniform), Objective::Welfare))
    });
    g.finish();
}

fn network(c: &mut Criterion) {
    let d = ValuationDistribution::two_peak(0.15, 0.1, 0.85, 0.1, 0.5).unwrap();
    let p = NetworkParams::xavier(5, 0).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
    let batch = sample_batch(&d, 5, 128, &mut rng);

    let mut g = c.benchmark_group("network");
    g.bench_function("forward n=5", |b| b.iter(|| p.forward(black_box(0b10111)).unwrap()));
    g.bench_function("porf cost n=5 batch 128", |b| {
        b.iter(|| porf_cost(&p, &d, black_box(&batch), Objective::Consumers, 1000.0))
    });
    g.finish();
}

criterion_group!(benches, evaluators, network);
criterion_main!(benches);
