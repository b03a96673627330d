use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lcmix::em::run_em;
use lcmix::EmConfig;
use lcmix_bench::model_sample;

fn em(c: &mut Criterion) {
    let mut group = c.benchmark_group("run_em");
    group.sample_size(10);
    for model in [1u8, 3, 4] {
        let (x, f0) = model_sample(model, 0.5, 1000, 2);
        let config = EmConfig::default();
        group.bench_with_input(BenchmarkId::new("model", model), &x, |b, x| {
            b.iter(|| run_em(x, &f0, &config).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, em);
criterion_main!(benches);
