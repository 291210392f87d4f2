//! Behavioral contrast between the bounded encoder and the baseline
//! architectures after end-to-end siamese training.

use linf_core::encoder::{
    encode_batch, forward_baseline, BaselineKind, BaselineParams, EncoderParams,
};
use linf_core::synth;
use linf_core::training::{train_siamese, train_siamese_baseline, PairSource, TrainConfig};

#[test]
fn trained_soft_threshold_codes_are_sparser() {
    let (features, labels) = synth::clusters(
        &synth::ClustersSpec {
            dim: 32,
            classes: 2,
            separation: 10.0,
        },
        120,
        41,
    )
    .unwrap();
    let source = PairSource::Labels(labels);
    let config = TrainConfig {
        epochs: 30,
        seed: 6,
        ..TrainConfig::default()
    };

    let bounded_init = EncoderParams::random(32, 16, 2, 1.0, 2).unwrap();
    let (bounded, bounded_history) =
        train_siamese(&features, &source, &config, bounded_init).unwrap();
    assert!(bounded_history.last().unwrap() < &bounded_history[0]);

    let snnh_init = BaselineParams::random(BaselineKind::Snnh, 32, 16, 2);
    let (snnh, snnh_history) =
        train_siamese_baseline(&features, &source, &config, snnh_init).unwrap();
    assert!(snnh_history.last().unwrap() < &snnh_history[0]);

    let bounded_codes = encode_batch(&bounded, &features).unwrap();
    let bounded_zeros = bounded_codes.iter().filter(|v| **v == 0.0).count();
    let mut snnh_zeros = 0;
    for m in 0..features.ncols() {
        let out = forward_baseline(&snnh, &features.column(m).clone_owned()).unwrap();
        snnh_zeros += out.iter().filter(|v| **v == 0.0).count();
    }
    assert!(
        snnh_zeros > bounded_zeros,
        "soft-threshold codes have {snnh_zeros} zeros vs {bounded_zeros} for the bounded encoder"
    );
}

#[test]
fn trained_nnh_loss_drops() {
    let (features, labels) = synth::clusters(
        &synth::ClustersSpec {
            dim: 16,
            classes: 2,
            separation: 8.0,
        },
        60,
        13,
    )
    .unwrap();
    let config = TrainConfig {
        epochs: 15,
        seed: 3,
        ..TrainConfig::default()
    };
    let init = BaselineParams::random(BaselineKind::Nnh, 16, 8, 1);
    let (_, history) =
        train_siamese_baseline(&features, &PairSource::Labels(labels), &config, init).unwrap();
    assert!(
        history.last().unwrap() < &(0.5 * history[0]),
        "history {history:?}"
    );
}
