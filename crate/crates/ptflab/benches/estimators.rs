use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use ptflab::gadgets::{
    estimate_pass_probability, estimate_pass_probability_seq, matching_dictator, t2_dictator,
    GadgetConfig, Variant,
};
use ptflab::gauss::RngSeed;

fn bench_pass_probability(c: &mut Criterion) {
    let mut group = c.benchmark_group("pass_probability");
    group.sample_size(10);

    let cases = [
        (Variant::T1, 16, 1),
        (Variant::Td, 16, 3),
        (Variant::T2, 16, 2),
    ];
    for (variant, n, d) in cases {
        let cfg = GadgetConfig::new(variant, n, d, RngSeed::new(7)).unwrap();
        let f = match variant {
            Variant::T2 => t2_dictator(n, 1).unwrap(),
            _ => matching_dictator(n, d, 1).unwrap(),
        };
        for samples in [10_000usize, 40_000] {
            group.throughput(Throughput::Elements(samples as u64));
            let id = format!("{variant}/{samples}");
            group.bench_with_input(BenchmarkId::new("parallel", &id), &samples, |b, &s| {
                b.iter(|| estimate_pass_probability(black_box(&f), &cfg, s).unwrap())
            });
            group.bench_with_input(BenchmarkId::new("sequential", &id), &samples, |b, &s| {
                b.iter(|| estimate_pass_probability_seq(black_box(&f), &cfg, s).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, bench_pass_probability);
criterion_main!(benches);
