use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use linf_bench::{gaussian_matrix, gaussian_vector, unit_column_matrix};
use linf_core::dictionary::Dictionary;
use linf_core::encoder::{
    encode_batch, forward, init_from_dictionary, EncoderParams, ForwardMode,
};
use linf_core::training::{backward, sgd_step, TrainConfig};

fn initialized_params(n: usize, code: usize) -> EncoderParams {
    let dict = Dictionary::from_matrix(unit_column_matrix(n, code, 3)).unwrap();
    let calibration = gaussian_matrix(n, 8, 5);
    init_from_dictionary(&dict, 0.6, 1.0, 2, &calibration)
        .unwrap()
        .params
}

fn bench_forward(c: &mut Criterion) {
    let params = initialized_params(384, 64);
    let signal = gaussian_vector(384, 11);
    c.bench_function("forward/384x64_k2", |b| {
        b.iter(|| forward(black_box(&params), black_box(&signal), ForwardMode::FixedBias).unwrap())
    });
}

fn bench_encode_batch(c: &mut Criterion) {
    let params = initialized_params(384, 64);
    let batch = gaussian_matrix(384, 128, 13);
    c.bench_function("encode_batch/384x64_k2_b128", |b| {
        b.iter(|| encode_batch(black_box(&params), black_box(&batch)).unwrap())
    });
}

fn bench_backward(c: &mut Criterion) {
    let params = initialized_params(64, 16);
    let config = TrainConfig::default();
    let ya = gaussian_vector(64, 17);
    let yb = gaussian_vector(64, 19);
    let (_, tape_a) = forward(&params, &ya, ForwardMode::FixedBias).unwrap();
    let (_, tape_b) = forward(&params, &yb, ForwardMode::FixedBias).unwrap();
    c.bench_function("backward/64x16_k2", |b| {
        b.iter(|| {
            backward(
                black_box(&params),
                black_box(&tape_a),
                black_box(&tape_b),
                false,
                &config,
            )
            .unwrap()
        })
    });
    let grads = backward(&params, &tape_a, &tape_b, false, &config).unwrap();
    c.bench_function("sgd_step/64x16_k2", |b| {
        b.iter(|| sgd_step(black_box(&params), black_box(&grads), 0.01).unwrap())
    });
}

criterion_group!(benches, bench_forward, bench_encode_batch, bench_backward);
criterion_main!(benches);
