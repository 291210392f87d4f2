use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use linf_core::hashing::{evaluate, hamming_distance, HashCode};

fn random_codes(count: usize, bits: usize, rng: &mut ChaCha8Rng) -> Vec<HashCode> {
    (0..count)
        .map(|_| HashCode::from_bits((0..bits).map(|_| rng.random()).collect()))
        .collect()
}

fn bench_hamming(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a = random_codes(1, 64, &mut rng).remove(0);
    let b = random_codes(1, 64, &mut rng).remove(0);
    c.bench_function("hamming_distance/64", |bench| {
        bench.iter(|| hamming_distance(black_box(&a), black_box(&b)).unwrap())
    });
}

fn bench_evaluate(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let database = random_codes(4000, 64, &mut rng);
    let database_labels: Vec<i64> = (0..4000).map(|_| rng.random_range(0..10)).collect();
    let queries = random_codes(100, 64, &mut rng);
    let query_labels: Vec<i64> = (0..100).map(|_| rng.random_range(0..10)).collect();
    c.bench_function("evaluate/100q_4000db_64bit", |bench| {
        bench.iter(|| {
            evaluate(
                black_box(&queries),
                &query_labels,
                black_box(&database),
                &database_labels,
                2,
                10,
            )
            .unwrap()
        })
    });
}

criterion_group!(benches, bench_hamming, bench_evaluate);
criterion_main!(benches);
