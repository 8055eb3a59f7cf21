use criterion::{criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion};

use flutes::benchgen::{define_schema, generate, GenConfig, TARGET};
use flutes::classifier::ClassifyOptions;
use flutes::engine::Engine;
use flutes::par;

fn loaded(corpus: &str, workers: usize) -> Engine {
    let mut e = Engine::in_memory();
    e.set_options(ClassifyOptions { workers, ..Default::default() });
    define_schema(&mut e, TARGET).unwrap();
    e.load_str(corpus).unwrap();
    e
}

fn find_members(c: &mut Criterion) {
    let mut group = c.benchmark_group("find_members");
    group.sample_size(10);
    for persons in [1_000, 5_000] {
        let cfg = GenConfig {
            persons,
            transactions: persons / 2,
            p_drop_orig: 0.1,
            p_drop_recv: 0.1,
            extra_attrs: 20,
            seed: 3,
        };
        let corpus = generate(&cfg);
        for w in [1, par::available().max(2)] {
            let label = if w == 1 { "sequential".to_string() } else { format!("parallel-{w}") };
            group.bench_with_input(BenchmarkId::new(label, persons), &w, |b, &w| {
                b.iter_batched(
                    || loaded(&corpus, w),
                    |mut e| e.find_members().unwrap(),
                    BatchSize::LargeInput,
                )
            });
        }
    }
    group.finish();
}

criterion_group!(benches, find_members);
criterion_main!(benches);
