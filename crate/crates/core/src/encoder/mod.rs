//! The unfolded box-constrained solver as a feed-forward encoder.
//!
//! Truncating the splitting iteration to K stages and treating its matrices
//! as free parameters gives the network
//!
//! ```text
//! z₁ = B_λ(W y + b₁)
//! z_k = B_λ(W y + S_k z_{k−1} + b_k)    k = 2 … K
//! ```
//!
//! where `B_λ` clips entry i into [−λᵢ, λᵢ]. The solver's closed forms
//!
//! ```text
//! W = (DᵀD + βI)⁻¹Dᵀ    S = β(DᵀD + βI)⁻¹    b_k = [(DᵀD + βI)⁻¹ − I/β]·p_{k−1}
//! ```
//!
//! make high-quality initializations: with the recorded per-sample
//! multiplier history in place of the fixed biases, the network reproduces
//! the truncated solver exactly ([`ForwardMode::Reference`]). The couplings
//! S_k and biases b_k are untied across stages for training.

mod baseline;
mod neurons;

pub use baseline::{
    backward_baseline, baseline_sgd_step, forward_baseline, forward_baseline_tape,
    BaselineGradients, BaselineKind, BaselineParams, BaselineTape, NnhParams, SnnhParams,
};
pub use neurons::{blu, neuron_apply, NeuronKind};

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dictionary::Dictionary;
use crate::error::{Error, Result};
use crate::solver::{admm_solve, least_squares, Problem, SystemFactor};

/// Learnable parameters of the K-stage encoder.
///
/// `W` is stored as the N×n operator applied to the input signal. The
/// couplings hold S_2 … S_K (stage 1 has none) and the biases b_1 … b_K.
/// The bound vector λ is shared by every stage and stays strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    pub(crate) w: DMatrix<f64>,
    pub(crate) s: Vec<DMatrix<f64>>,
    pub(crate) b: Vec<DVector<f64>>,
    pub(crate) lambda: DVector<f64>,
}

impl EncoderParams {
    pub fn new(
        w: DMatrix<f64>,
        s: Vec<DMatrix<f64>>,
        b: Vec<DVector<f64>>,
        lambda: DVector<f64>,
    ) -> Result<Self> {
        let code_dim = w.nrows();
        if b.is_empty() {
            return Err(Error::InvalidArgument(
                "encoder needs at least one stage".into(),
            ));
        }
        if s.len() + 1 != b.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} couplings do not match {} biases (need one fewer)",
                s.len(),
                b.len()
            )));
        }
        for (k, m) in s.iter().enumerate() {
            if m.nrows() != code_dim || m.ncols() != code_dim {
                return Err(Error::DimensionMismatch(format!(
                    "coupling {} is {}×{}, expected {code_dim}×{code_dim}",
                    k + 2,
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        for (k, v) in b.iter().enumerate() {
            if v.len() != code_dim {
                return Err(Error::DimensionMismatch(format!(
                    "bias {} has length {}, expected {code_dim}",
                    k + 1,
                    v.len()
                )));
            }
        }
        if lambda.len() != code_dim {
            return Err(Error::DimensionMismatch(format!(
                "λ has length {}, expected {code_dim}",
                lambda.len()
            )));
        }
        if let Some(bad) = lambda.iter().find(|l| !(**l > 0.0) || !l.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "λ entries must be positive and finite, got {bad}"
            )));
        }
        let finite = w.iter().all(|v| v.is_finite())
            && s.iter().all(|m| m.iter().all(|v| v.is_finite()))
            && b.iter().all(|v| v.iter().all(|x| x.is_finite()));
        if !finite {
            return Err(Error::InvalidArgument(
                "encoder parameters must be finite".into(),
            ));
        }
        Ok(Self { w, s, b, lambda })
    }

    /// Gaussian parameters scaled by fan-in, zero biases, constant λ.
    pub fn random(
        input_dim: usize,
        code_dim: usize,
        stages: usize,
        lambda0: f64,
        seed: u64,
    ) -> Result<Self> {
        if stages == 0 {
            return Err(Error::InvalidArgument(
                "encoder needs at least one stage".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w_scale = 1.0 / (input_dim as f64).sqrt();
        let s_scale = 1.0 / (code_dim as f64).sqrt();
        let w = DMatrix::from_fn(code_dim, input_dim, |_, _| {
            w_scale * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
        });
        let s = (0..stages - 1)
            .map(|_| {
                DMatrix::from_fn(code_dim, code_dim, |_, _| {
                    s_scale * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
                })
            })
            .collect();
        let b = (0..stages).map(|_| DVector::zeros(code_dim)).collect();
        Self::new(w, s, b, DVector::from_element(code_dim, lambda0))
    }

    pub fn stages(&self) -> usize {
        self.b.len()
    }

    pub fn input_dim(&self) -> usize {
        self.w.ncols()
    }

    pub fn code_dim(&self) -> usize {
        self.w.nrows()
    }

    pub fn input_weight(&self) -> &DMatrix<f64> {
        &self.w
    }

    /// S_2 … S_K.
    pub fn couplings(&self) -> &[DMatrix<f64>] {
        &self.s
    }

    /// b_1 … b_K.
    pub fn biases(&self) -> &[DVector<f64>] {
        &self.b
    }

    pub fn lambda(&self) -> &DVector<f64> {
        &self.lambda
    }
}

/// Per-stage record of a forward pass, sufficient to replay it exactly and
/// to backpropagate through it.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTape {
    pub input: DVector<f64>,
    /// Pre-activations u_1 … u_K.
    pub pre: Vec<DVector<f64>>,
    /// Activations z_1 … z_K.
    pub post: Vec<DVector<f64>>,
}

impl ForwardTape {
    pub fn output(&self) -> &DVector<f64> {
        self.post.last().expect("tape has at least one stage")
    }
}

/// Bias handling for [`forward`].
#[derive(Debug, Clone, Copy)]
pub enum ForwardMode<'a> {
    /// Use the learned per-stage biases.
    FixedBias,
    /// Replace the fixed biases with the per-sample closed form
    /// `bias_map · p_{k−1}`: stage 1 gets a zero bias (the multiplier starts
    /// at zero) and stage k ≥ 2 reads multiplier k−1 from `multipliers`,
    /// indexed as in [`crate::solver::AdmmTrace::p`]. A trace cut short by
    /// exact convergence repeats its last entry, which is a fixed point.
    Reference {
        bias_map: &'a DMatrix<f64>,
        multipliers: &'a [DVector<f64>],
    },
}

/// Dictionary-based initialization plus the bias map needed by
/// [`ForwardMode::Reference`].
#[derive(Debug, Clone)]
pub struct InitializedEncoder {
    pub params: EncoderParams,
    /// (DᵀD + βI)⁻¹ − I/β: maps a multiplier to the bias it induces.
    pub bias_map: DMatrix<f64>,
}

fn matvec(m: &DMatrix<f64>, v: &DVector<f64>, macs: &mut usize) -> DVector<f64> {
    *macs += m.nrows() * m.ncols();
    m * v
}

fn forward_impl(
    params: &EncoderParams,
    signal: &DVector<f64>,
    mode: ForwardMode<'_>,
    macs: &mut usize,
) -> Result<(DVector<f64>, ForwardTape)> {
    if signal.len() != params.input_dim() {
        return Err(Error::DimensionMismatch(format!(
            "signal has length {}, encoder expects {}",
            signal.len(),
            params.input_dim()
        )));
    }
    if let ForwardMode::Reference {
        bias_map,
        multipliers,
    } = mode
    {
        if bias_map.nrows() != params.code_dim() || bias_map.ncols() != params.code_dim() {
            return Err(Error::DimensionMismatch(
                "bias map does not match the encoder's code dimension".into(),
            ));
        }
        if params.stages() > 1 && multipliers.is_empty() {
            return Err(Error::InvalidArgument(
                "reference mode needs a recorded multiplier trace".into(),
            ));
        }
    }

    let stages = params.stages();
    let wy = matvec(&params.w, signal, macs);
    let mut pre = Vec::with_capacity(stages);
    let mut post = Vec::with_capacity(stages);
    let mut previous: Option<DVector<f64>> = None;
    for k in 0..stages {
        let mut u = wy.clone();
        if let Some(z) = &previous {
            u += matvec(&params.s[k - 1], z, macs);
        }
        match mode {
            ForwardMode::FixedBias => u += &params.b[k],
            ForwardMode::Reference {
                bias_map,
                multipliers,
            } => {
                if k > 0 {
                    let p = &multipliers[(k - 1).min(multipliers.len() - 1)];
                    u += matvec(bias_map, p, macs);
                }
            }
        }
        let z = blu(&u, &params.lambda)?;
        pre.push(u);
        post.push(z.clone());
        previous = Some(z);
    }
    let output = previous.expect("at least one stage");
    Ok((
        output,
        ForwardTape {
            input: signal.clone(),
            pre,
            post,
        },
    ))
}

/// Runs the encoder on one signal, returning the code and the stage tape.
///
/// The output always satisfies |xᵢ| ≤ λᵢ.
pub fn forward(
    params: &EncoderParams,
    signal: &DVector<f64>,
    mode: ForwardMode<'_>,
) -> Result<(DVector<f64>, ForwardTape)> {
    let mut macs = 0;
    forward_impl(params, signal, mode, &mut macs)
}

/// [`forward`] in fixed-bias mode with an instrumented multiply-add counter
/// covering the linear layers.
pub fn forward_counting(
    params: &EncoderParams,
    signal: &DVector<f64>,
) -> Result<(DVector<f64>, ForwardTape, usize)> {
    let mut macs = 0;
    let (output, tape) = forward_impl(params, signal, ForwardMode::FixedBias, &mut macs)?;
    Ok((output, tape, macs))
}

/// Multiply-adds spent in the linear layers of one fixed-bias forward pass:
/// nN for the input map plus (K−1)N² for the stage couplings.
pub fn linear_mac_count(params: &EncoderParams) -> usize {
    let n = params.input_dim();
    let code = params.code_dim();
    n * code + (params.stages() - 1) * code * code
}

/// Column-wise fixed-bias forward over a batch of signals.
pub fn encode_batch(params: &EncoderParams, signals: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if signals.nrows() != params.input_dim() {
        return Err(Error::DimensionMismatch(format!(
            "signals have {} rows, encoder expects {}",
            signals.nrows(),
            params.input_dim()
        )));
    }
    let mut codes = DMatrix::zeros(params.code_dim(), signals.ncols());
    for m in 0..signals.ncols() {
        let (code, _) = forward(params, &signals.column(m).clone_owned(), ForwardMode::FixedBias)?;
        codes.set_column(m, &code);
    }
    Ok(codes)
}

/// Suggested bound: `scale` × the median over calibration signals of the
/// sup-norm of their least-squares codes. The default scale 0.8 keeps the
/// constraint active without crushing the representation.
pub fn lambda0_from_calibration(
    dictionary: &Dictionary,
    calibration: &DMatrix<f64>,
    scale: f64,
) -> Result<f64> {
    if calibration.ncols() == 0 {
        return Err(Error::InvalidArgument("calibration set is empty".into()));
    }
    if calibration.nrows() != dictionary.signal_dim() {
        return Err(Error::DimensionMismatch(format!(
            "calibration signals have length {}, dictionary expects {}",
            calibration.nrows(),
            dictionary.signal_dim()
        )));
    }
    if !(scale > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "scale must be positive, got {scale}"
        )));
    }
    let mut peaks: Vec<f64> = (0..calibration.ncols())
        .map(|m| {
            least_squares(dictionary.matrix(), &calibration.column(m).clone_owned())
                .map(|x| x.amax())
        })
        .collect::<Result<_>>()?;
    peaks.sort_by(|a, b| a.total_cmp(b));
    let mid = peaks.len() / 2;
    let median = if peaks.len() % 2 == 1 {
        peaks[mid]
    } else {
        0.5 * (peaks[mid - 1] + peaks[mid])
    };
    let lambda0 = scale * median;
    if !(lambda0 > 0.0) || !lambda0.is_finite() {
        return Err(Error::Numeric(format!(
            "degenerate calibration: derived bound {lambda0}"
        )));
    }
    Ok(lambda0)
}

/// Builds encoder parameters from a dictionary via the solver's closed
/// forms, truncated to `stages` iterations.
///
/// The first-stage bias is exactly zero (the multiplier starts at zero).
/// Later biases use the mean recorded multiplier over the calibration
/// signals; per-sample exactness is available through
/// [`ForwardMode::Reference`].
pub fn init_from_dictionary(
    dictionary: &Dictionary,
    penalty: f64,
    lambda0: f64,
    stages: usize,
    calibration: &DMatrix<f64>,
) -> Result<InitializedEncoder> {
    if stages == 0 {
        return Err(Error::InvalidArgument(
            "encoder needs at least one stage".into(),
        ));
    }
    if !(penalty > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "penalty must be positive, got {penalty}"
        )));
    }
    if !(lambda0 > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "λ₀ must be positive, got {lambda0}"
        )));
    }
    if calibration.ncols() == 0 {
        return Err(Error::InvalidArgument("calibration set is empty".into()));
    }
    if calibration.nrows() != dictionary.signal_dim() {
        return Err(Error::DimensionMismatch(format!(
            "calibration signals have length {}, dictionary expects {}",
            calibration.nrows(),
            dictionary.signal_dim()
        )));
    }

    let d = dictionary.matrix();
    let code_dim = dictionary.atoms();
    let factor = SystemFactor::from_parts(d, penalty)?;
    let w = factor.solve_matrix(&d.transpose());
    let inverse = factor.inverse();
    let s_shared = &inverse * penalty;
    let bias_map = &inverse - DMatrix::identity(code_dim, code_dim) / penalty;

    let mut mean_multipliers = vec![DVector::<f64>::zeros(code_dim); stages.saturating_sub(1)];
    if stages >= 2 {
        for m in 0..calibration.ncols() {
            let problem = Problem::with_penalty(
                d.clone(),
                calibration.column(m).clone_owned(),
                lambda0,
                penalty,
            )?;
            let (_, trace) = admm_solve(&problem, stages, f64::MIN_POSITIVE)?;
            for t in 1..stages {
                let p = trace
                    .multiplier(t)
                    .expect("solver ran at least one iteration");
                mean_multipliers[t - 1] += p;
            }
        }
        let inv_count = 1.0 / calibration.ncols() as f64;
        for p in &mut mean_multipliers {
            *p *= inv_count;
        }
    }

    let mut b = vec![DVector::zeros(code_dim)];
    for p in &mean_multipliers {
        b.push(&bias_map * p);
    }
    let s = vec![s_shared; stages - 1];
    let params = EncoderParams::new(w, s, b, DVector::from_element(code_dim, lambda0))?;
    Ok(InitializedEncoder { params, bias_map })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn toy_params(stages: usize) -> EncoderParams {
        EncoderParams::random(6, 4, stages, 0.9, 5).unwrap()
    }

    #[test]
    fn params_validation() {
        let w = DMatrix::zeros(4, 6);
        let lambda = DVector::from_element(4, 1.0);
        assert!(EncoderParams::new(w.clone(), vec![], vec![], lambda.clone()).is_err());
        assert!(EncoderParams::new(
            w.clone(),
            vec![DMatrix::zeros(3, 4)],
            vec![DVector::zeros(4), DVector::zeros(4)],
            lambda.clone()
        )
        .is_err());
        let mut bad_lambda = lambda.clone();
        bad_lambda[2] = 0.0;
        assert!(
            EncoderParams::new(w.clone(), vec![], vec![DVector::zeros(4)], bad_lambda).is_err()
        );
        assert!(EncoderParams::new(w, vec![], vec![DVector::zeros(4)], lambda).is_ok());
    }

    #[test]
    fn forward_zero_input_zero_bias_gives_zero() {
        let mut params = toy_params(2);
        for b in &mut params.b {
            b.fill(0.0);
        }
        let (out, tape) =
            forward(&params, &DVector::zeros(6), ForwardMode::FixedBias).unwrap();
        assert_eq!(out, DVector::zeros(4));
        assert_eq!(tape.post.len(), 2);
    }

    #[test]
    fn forward_output_bounded_by_lambda() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for trial in 0..50 {
            let params = EncoderParams::random(6, 4, 1 + trial % 3, 0.4, trial as u64).unwrap();
            let signal = DVector::from_fn(6, |_, _| 10.0 * rng.random::<f64>() - 5.0);
            let (out, _) = forward(&params, &signal, ForwardMode::FixedBias).unwrap();
            for i in 0..4 {
                assert!(out[i].abs() <= params.lambda[i]);
            }
        }
    }

    #[test]
    fn forward_tape_replays_bit_exactly() {
        let params = toy_params(3);
        let signal = DVector::from_fn(6, |i, _| (i as f64) - 2.5);
        let (a, tape_a) = forward(&params, &signal, ForwardMode::FixedBias).unwrap();
        let (b, tape_b) = forward(&params, &signal, ForwardMode::FixedBias).unwrap();
        assert_eq!(a, b);
        assert_eq!(tape_a, tape_b);
    }

    #[test]
    fn orthonormal_dictionary_closed_forms() {
        // DᵀD = I: S = β/(1+β)·I and W = Dᵀ/(1+β) with β = 0.6.
        let dict = Dictionary::from_matrix(DMatrix::identity(5, 4)).unwrap();
        let calibration = DMatrix::from_element(5, 2, 0.3);
        let init = init_from_dictionary(&dict, 0.6, 1.0, 2, &calibration).unwrap();
        let expected_s = DMatrix::identity(4, 4) * (0.6 / 1.6);
        let expected_w = dict.matrix().transpose() / 1.6;
        assert!((&init.params.s[0] - expected_s).amax() < 1e-12);
        assert!((&init.params.w - expected_w).amax() < 1e-12);
        assert_eq!(init.params.b[0], DVector::zeros(4));
    }

    #[test]
    fn zero_multiplier_trace_gives_zero_bias() {
        // A huge bound keeps the constraint inactive, so every recorded
        // multiplier is zero and the later-stage biases vanish.
        let dict = Dictionary::random(6, 3, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let calibration = DMatrix::from_fn(6, 4, |_, _| rng.random::<f64>() - 0.5);
        let init = init_from_dictionary(&dict, 0.6, 1e9, 3, &calibration).unwrap();
        assert!(init.params.b[1].amax() < 1e-12);
        assert!(init.params.b[2].amax() < 1e-12);
    }

    #[test]
    fn encode_batch_equals_independent_forwards() {
        let params = toy_params(2);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let signals = DMatrix::from_fn(6, 128, |_, _| rng.random::<f64>() * 4.0 - 2.0);
        let batch = encode_batch(&params, &signals).unwrap();
        for m in 0..128 {
            let (one, _) = forward(
                &params,
                &signals.column(m).clone_owned(),
                ForwardMode::FixedBias,
            )
            .unwrap();
            assert_eq!(batch.column(m), one.column(0));
        }
    }

    #[test]
    fn single_column_batch_reduces_to_forward() {
        let params = toy_params(2);
        let signal = DVector::from_fn(6, |i, _| i as f64 * 0.3);
        let batch = encode_batch(&params, &DMatrix::from_columns(&[signal.clone()])).unwrap();
        let (one, _) = forward(&params, &signal, ForwardMode::FixedBias).unwrap();
        assert_eq!(batch.column(0), one.column(0));
    }

    #[test]
    fn mac_count_within_complexity_budget() {
        let params = EncoderParams::random(384, 64, 2, 1.0, 0).unwrap();
        let signal = DVector::from_element(384, 0.1);
        let (counted_out, _, macs) = forward_counting(&params, &signal).unwrap();
        let (plain_out, _) = forward(&params, &signal, ForwardMode::FixedBias).unwrap();
        assert_eq!(counted_out, plain_out);
        assert_eq!(macs, linear_mac_count(&params));
        assert!(macs <= 2 * (384 * 64 + 2 * 64 * 64), "macs {macs}");
    }

    #[test]
    fn lambda0_median_rule() {
        // Identity dictionary: least-squares code equals the signal, so the
        // sup-norms are known exactly.
        let dict = Dictionary::from_matrix(DMatrix::identity(3, 3)).unwrap();
        let mut calibration = DMatrix::zeros(3, 3);
        calibration[(0, 0)] = 1.0;
        calibration[(1, 1)] = 2.0;
        calibration[(2, 2)] = 4.0;
        let lambda0 = lambda0_from_calibration(&dict, &calibration, 0.8).unwrap();
        assert!((lambda0 - 0.8 * 2.0).abs() < 1e-12);
    }

    #[test]
    fn init_validation() {
        let dict = Dictionary::random(6, 3, 1).unwrap();
        let calibration = DMatrix::zeros(6, 1);
        assert!(init_from_dictionary(&dict, 0.0, 1.0, 2, &calibration).is_err());
        assert!(init_from_dictionary(&dict, 0.6, 0.0, 2, &calibration).is_err());
        assert!(init_from_dictionary(&dict, 0.6, 1.0, 0, &calibration).is_err());
        let empty = DMatrix::zeros(6, 0);
        assert!(init_from_dictionary(&dict, 0.6, 1.0, 2, &empty).is_err());
        let wrong_rows = DMatrix::zeros(5, 2);
        assert!(init_from_dictionary(&dict, 0.6, 1.0, 2, &wrong_rows).is_err());
    }
}
