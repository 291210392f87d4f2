//! The encoder must reproduce the truncated solver exactly when its biases
//! come from the recorded multiplier history.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use linf_core::dictionary::Dictionary;
use linf_core::encoder::{
    forward, init_from_dictionary, lambda0_from_calibration, ForwardMode,
};
use linf_core::solver::{admm_solve, Problem};

fn random_signal(n: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(n, |_, _| {
        <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)
    })
}

#[test]
fn reference_mode_matches_truncated_solver() {
    for seed in 0..20u64 {
        let dict = Dictionary::random(8, 4, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let signal = random_signal(8, &mut rng);
        let calibration = DMatrix::from_columns(&[signal.clone()]);
        let lambda0 = lambda0_from_calibration(&dict, &calibration, 0.8).unwrap();
        for stages in 1..=3usize {
            let init = init_from_dictionary(&dict, 0.6, lambda0, stages, &calibration).unwrap();
            let problem =
                Problem::new(dict.matrix().clone(), signal.clone(), lambda0).unwrap();
            let (_, trace) = admm_solve(&problem, stages, f64::MIN_POSITIVE).unwrap();
            let z_truncated = trace.z.last().unwrap();

            let (reference_out, _) = forward(
                &init.params,
                &signal,
                ForwardMode::Reference {
                    bias_map: &init.bias_map,
                    multipliers: &trace.p,
                },
            )
            .unwrap();
            let gap = (&reference_out - z_truncated).amax();
            assert!(
                gap <= 1e-10,
                "seed {seed}, K={stages}: reference mode off by {gap}"
            );

            // With a single calibration signal the mean multiplier equals
            // the per-sample one, so the fixed biases match too.
            let (fixed_out, _) =
                forward(&init.params, &signal, ForwardMode::FixedBias).unwrap();
            let fixed_gap = (&fixed_out - z_truncated).amax();
            assert!(
                fixed_gap <= 1e-10,
                "seed {seed}, K={stages}: fixed bias off by {fixed_gap}"
            );
        }
    }
}

#[test]
fn reference_mode_exact_on_every_calibration_signal() {
    // Multi-signal calibration: the fixed biases average the multiplier
    // histories, but reference mode stays exact per sample.
    let dict = Dictionary::random(8, 4, 33).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    let calibration = DMatrix::from_fn(8, 12, |_, _| {
        <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
    });
    let lambda0 = lambda0_from_calibration(&dict, &calibration, 0.8).unwrap();
    let stages = 2;
    let init = init_from_dictionary(&dict, 0.6, lambda0, stages, &calibration).unwrap();
    for m in 0..calibration.ncols() {
        let signal = calibration.column(m).clone_owned();
        let problem = Problem::new(dict.matrix().clone(), signal.clone(), lambda0).unwrap();
        let (_, trace) = admm_solve(&problem, stages, f64::MIN_POSITIVE).unwrap();
        let (out, _) = forward(
            &init.params,
            &signal,
            ForwardMode::Reference {
                bias_map: &init.bias_map,
                multipliers: &trace.p,
            },
        )
        .unwrap();
        let gap = (&out - trace.z.last().unwrap()).amax();
        assert!(gap <= 1e-10, "signal {m}: off by {gap}");
    }
}

#[test]
fn unfolding_depth_improves_objective_on_average() {
    // More unfolded stages track the solver further, so the mean objective
    // of the truncated codes should not get worse with depth.
    let mut totals = [0.0f64; 3];
    for seed in 0..10u64 {
        let dict = Dictionary::random(8, 4, 200 + seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(300 + seed);
        let signal = random_signal(8, &mut rng);
        let calibration = DMatrix::from_columns(&[signal.clone()]);
        let lambda0 = lambda0_from_calibration(&dict, &calibration, 0.8).unwrap();
        let problem = Problem::new(dict.matrix().clone(), signal.clone(), lambda0).unwrap();
        for (slot, stages) in (1..=3usize).enumerate() {
            let init =
                init_from_dictionary(&dict, 0.6, lambda0, stages, &calibration).unwrap();
            let (out, _) = forward(&init.params, &signal, ForwardMode::FixedBias).unwrap();
            totals[slot] += linf_core::solver::objective(&problem, &out).unwrap();
        }
    }
    assert!(totals[2] <= totals[0] + 1e-9, "objectives {totals:?}");
}
