use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hrvguard_bench::{rr_series, store};
use hrvguard_core::knowledge::{govern, retrieve, RetrievalConfig};
use hrvguard_core::signal::{dfa_alpha, sample_entropy, welch_psd};
use std::hint::black_box;

fn sampen(c: &mut Criterion) {
    let mut g = c.benchmark_group("sampen");
    for n in [300, 1000] {
        let x = rr_series(n, 1);
        g.bench_with_input(BenchmarkId::from_parameter(n), &x, |b, x| b.iter(|| sample_entropy(black_box(x), 2, 0.2)));
    }
    g.finish();
}

fn welch(c: &mut Criterion) {
    let x = rr_series(1200, 2);
    c.bench_function("welch_1200", |b| b.iter(|| welch_psd(black_box(&x), 4.0, 256, 0.5)));
}

fn dfa(c: &mut Criterion) {
    let x = rr_series(1000, 3);
    c.bench_function("dfa_1000", |b| b.iter(|| dfa_alpha(black_box(&x), 4, 16, true)));
}

fn governance(c: &mut Criterion) {
    let (s, e) = store(500, 4);
    let cfg = RetrievalConfig {
        similarity_threshold: 0.0,
        top_k: 50,
        ..RetrievalConfig::default()
    };
    let topics = vec!["vagal".to_string()];
    c.bench_function("retrieve_govern_500", |b| {
        b.iter(|| govern(retrieve(black_box("RMSSD vagal tone under stress"), &s, &e, &cfg).unwrap(), &topics, &cfg))
    });
}

criterion_group!(benches, sampen, welch, dfa, governance);
criterion_main!(benches);
