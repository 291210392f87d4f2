//! Siamese training of encoder pairs under a contrastive pairwise loss.
//!
//! Two parameter-sharing encoder columns embed a pair (y, y′); with
//! d = ‖x(y) − x(y′)‖₂ the loss is
//!
//! ```text
//! similar pair:     ½ d²
//! dissimilar pair:  ½ max(0, m − d)²
//! ```
//!
//! so similar pairs are pulled together and dissimilar ones pushed to at
//! least the margin m. Optimization is plain minibatch SGD — constant
//! learning rate, no momentum — which with a dictionary-based
//! initialization trains stably without rate schedules.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encoder::{
    backward_baseline, forward, forward_baseline_tape, baseline_sgd_step, BaselineGradients,
    BaselineParams, BaselineTape, EncoderParams, ForwardMode, ForwardTape,
};
use crate::error::{Error, Result};

/// Floor applied to λ (and baseline thresholds) after every step so the
/// positivity invariant survives training.
pub const LAMBDA_FLOOR: f64 = 1e-6;

/// One minibatch of feature pairs.
#[derive(Debug, Clone)]
pub struct PairBatch {
    /// n×B anchors.
    pub anchors: DMatrix<f64>,
    /// n×B partners.
    pub others: DMatrix<f64>,
    pub similar: Vec<bool>,
}

impl PairBatch {
    pub fn len(&self) -> usize {
        self.similar.len()
    }

    pub fn is_empty(&self) -> bool {
        self.similar.is_empty()
    }
}

/// Gradient accumulator mirroring [`EncoderParams`].
#[derive(Debug, Clone)]
pub struct Gradients {
    pub w: DMatrix<f64>,
    pub s: Vec<DMatrix<f64>>,
    pub b: Vec<DVector<f64>>,
    pub lambda: DVector<f64>,
}

impl Gradients {
    pub fn zeros(params: &EncoderParams) -> Self {
        Self {
            w: DMatrix::zeros(params.code_dim(), params.input_dim()),
            s: params
                .couplings()
                .iter()
                .map(|m| DMatrix::zeros(m.nrows(), m.ncols()))
                .collect(),
            b: params
                .biases()
                .iter()
                .map(|v| DVector::zeros(v.len()))
                .collect(),
            lambda: DVector::zeros(params.code_dim()),
        }
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        self.w += &other.w;
        for (a, b) in self.s.iter_mut().zip(&other.s) {
            *a += b;
        }
        for (a, b) in self.b.iter_mut().zip(&other.b) {
            *a += b;
        }
        self.lambda += &other.lambda;
    }

    pub fn scale(&mut self, factor: f64) {
        self.w *= factor;
        for m in &mut self.s {
            *m *= factor;
        }
        for v in &mut self.b {
            *v *= factor;
        }
        self.lambda *= factor;
    }

    pub fn is_finite(&self) -> bool {
        self.w.iter().all(|v| v.is_finite())
            && self.s.iter().all(|m| m.iter().all(|v| v.is_finite()))
            && self.b.iter().all(|v| v.iter().all(|x| x.is_finite()))
            && self.lambda.iter().all(|v| v.is_finite())
    }
}

/// Training hyperparameters. Momentum exists only to document that it is
/// fixed at zero.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub momentum: f64,
    pub margin: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            batch_size: 128,
            momentum: 0.0,
            margin: 5.0,
            epochs: 50,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(self.margin > 0.0) {
            return Err(Error::Config(format!(
                "margin must be positive, got {}",
                self.margin
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if self.momentum != 0.0 {
            return Err(Error::Config(
                "momentum is fixed at 0 in this implementation".into(),
            ));
        }
        Ok(())
    }
}

/// Contrastive loss of one pair of codes.
pub fn pairwise_loss(xa: &DVector<f64>, xb: &DVector<f64>, similar: bool, margin: f64) -> f64 {
    assert_eq!(xa.len(), xb.len(), "pair codes must have equal lengths");
    let distance = (xa - xb).norm();
    if similar {
        0.5 * distance * distance
    } else {
        let hinge = (margin - distance).max(0.0);
        0.5 * hinge * hinge
    }
}

/// Loss gradients with respect to the two codes.
///
/// A dissimilar pair at exactly zero distance has no descent direction; the
/// zero subgradient is used there.
fn output_gradients(
    xa: &DVector<f64>,
    xb: &DVector<f64>,
    similar: bool,
    margin: f64,
) -> (DVector<f64>, DVector<f64>) {
    let diff = xa - xb;
    if similar {
        return (diff.clone(), -diff);
    }
    let distance = diff.norm();
    if distance >= margin || distance == 0.0 {
        let zero = DVector::zeros(xa.len());
        return (zero.clone(), zero);
    }
    let factor = -(margin - distance) / distance;
    let ga = diff * factor;
    let gb = -&ga;
    (ga, gb)
}

/// Backpropagates `output_grad` through one encoder column described by
/// `tape`, accumulating into `grads`.
///
/// Clip subgradient conventions: d/du is 1 on |u| ≤ λ (ties included) and 0
/// outside; d/dλᵢ is sign(uᵢ) on |uᵢ| ≥ λᵢ and 0 inside, taken on the
/// composite form λᵢ·clip(uᵢ/λᵢ) so no 0/0 arises at uᵢ = 0.
fn backprop_column(
    params: &EncoderParams,
    tape: &ForwardTape,
    output_grad: &DVector<f64>,
    grads: &mut Gradients,
) {
    let stages = params.stages();
    let lambda = params.lambda();
    let mut g = output_grad.clone();
    for k in (0..stages).rev() {
        let u = &tape.pre[k];
        let mut du = DVector::zeros(u.len());
        for i in 0..u.len() {
            if u[i].abs() >= lambda[i] {
                grads.lambda[i] += g[i] * u[i].signum();
            }
            if u[i].abs() <= lambda[i] {
                du[i] = g[i];
            }
        }
        grads.b[k] += &du;
        grads.w += &du * tape.input.transpose();
        if k > 0 {
            grads.s[k - 1] += &du * tape.post[k - 1].transpose();
            g = params.couplings()[k - 1].transpose() * &du;
        }
    }
}

fn check_tape(params: &EncoderParams, tape: &ForwardTape) -> Result<()> {
    if tape.pre.len() != params.stages()
        || tape.post.len() != params.stages()
        || tape.input.len() != params.input_dim()
        || tape.pre.iter().any(|u| u.len() != params.code_dim())
    {
        return Err(Error::InvalidArgument(
            "tape does not match the encoder parameters".into(),
        ));
    }
    Ok(())
}

/// Exact subgradients of [`pairwise_loss`] for one siamese pair, with both
/// columns accumulated into the shared parameters.
pub fn backward(
    params: &EncoderParams,
    tape_a: &ForwardTape,
    tape_b: &ForwardTape,
    similar: bool,
    config: &TrainConfig,
) -> Result<Gradients> {
    check_tape(params, tape_a)?;
    check_tape(params, tape_b)?;
    let (ga, gb) = output_gradients(tape_a.output(), tape_b.output(), similar, config.margin);
    let mut grads = Gradients::zeros(params);
    backprop_column(params, tape_a, &ga, &mut grads);
    backprop_column(params, tape_b, &gb, &mut grads);
    Ok(grads)
}

/// params − lr·grads, with λ floored at [`LAMBDA_FLOOR`].
pub fn sgd_step(
    params: &EncoderParams,
    grads: &Gradients,
    learning_rate: f64,
) -> Result<EncoderParams> {
    if !(learning_rate >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "learning rate must be nonnegative, got {learning_rate}"
        )));
    }
    if !grads.is_finite() {
        return Err(Error::Numeric(
            "non-finite gradient: training diverged or inputs are invalid".into(),
        ));
    }
    let w = &params.w - &grads.w * learning_rate;
    let s = params
        .s
        .iter()
        .zip(&grads.s)
        .map(|(m, g)| m - g * learning_rate)
        .collect();
    let b = params
        .b
        .iter()
        .zip(&grads.b)
        .map(|(v, g)| v - g * learning_rate)
        .collect();
    let lambda = (&params.lambda - &grads.lambda * learning_rate).map(|l| l.max(LAMBDA_FLOOR));
    EncoderParams::new(w, s, b, lambda)
}

/// Where training pairs come from: class labels (pairs are drawn from
/// same-label and different-label pools) or an explicit pair list.
#[derive(Debug, Clone)]
pub enum PairSource {
    Labels(Vec<i64>),
    /// (anchor index, other index, similar).
    Pairs(Vec<(usize, usize, bool)>),
}

struct PairSampler {
    by_label: Vec<Vec<usize>>,
    labels: Vec<usize>,
    similar_anchors: Vec<usize>,
    explicit_similar: Vec<(usize, usize)>,
    explicit_dissimilar: Vec<(usize, usize)>,
    count: usize,
}

impl PairSampler {
    fn new(source: &PairSource, count: usize) -> Result<Self> {
        match source {
            PairSource::Labels(raw) => {
                if raw.len() != count {
                    return Err(Error::Config(format!(
                        "{} labels for {count} samples",
                        raw.len()
                    )));
                }
                let mut distinct: Vec<i64> = raw.clone();
                distinct.sort_unstable();
                distinct.dedup();
                let labels: Vec<usize> = raw
                    .iter()
                    .map(|l| distinct.binary_search(l).expect("label present"))
                    .collect();
                let mut by_label = vec![Vec::new(); distinct.len()];
                for (index, &label) in labels.iter().enumerate() {
                    by_label[label].push(index);
                }
                let similar_anchors: Vec<usize> = (0..count)
                    .filter(|&i| by_label[labels[i]].len() >= 2)
                    .collect();
                if similar_anchors.is_empty() {
                    return Err(Error::Config(
                        "no similar pairs available: every class is a singleton".into(),
                    ));
                }
                if by_label.len() < 2 {
                    return Err(Error::Config(
                        "no dissimilar pairs available: only one class present".into(),
                    ));
                }
                Ok(Self {
                    by_label,
                    labels,
                    similar_anchors,
                    explicit_similar: Vec::new(),
                    explicit_dissimilar: Vec::new(),
                    count,
                })
            }
            PairSource::Pairs(pairs) => {
                let mut explicit_similar = Vec::new();
                let mut explicit_dissimilar = Vec::new();
                for &(a, b, similar) in pairs {
                    if a >= count || b >= count {
                        return Err(Error::Config(format!(
                            "pair ({a}, {b}) references a sample outside 0..{count}"
                        )));
                    }
                    if similar {
                        explicit_similar.push((a, b));
                    } else {
                        explicit_dissimilar.push((a, b));
                    }
                }
                if explicit_similar.is_empty() || explicit_dissimilar.is_empty() {
                    return Err(Error::Config(
                        "pair list must contain both similar and dissimilar pairs".into(),
                    ));
                }
                Ok(Self {
                    by_label: Vec::new(),
                    labels: Vec::new(),
                    similar_anchors: Vec::new(),
                    explicit_similar,
                    explicit_dissimilar,
                    count,
                })
            }
        }
    }

    fn draw_similar(&self, rng: &mut ChaCha8Rng) -> (usize, usize) {
        if !self.explicit_similar.is_empty() {
            return self.explicit_similar[rng.random_range(0..self.explicit_similar.len())];
        }
        let anchor = self.similar_anchors[rng.random_range(0..self.similar_anchors.len())];
        let pool = &self.by_label[self.labels[anchor]];
        loop {
            let other = pool[rng.random_range(0..pool.len())];
            if other != anchor {
                return (anchor, other);
            }
        }
    }

    fn draw_dissimilar(&self, rng: &mut ChaCha8Rng) -> (usize, usize) {
        if !self.explicit_dissimilar.is_empty() {
            return self.explicit_dissimilar[rng.random_range(0..self.explicit_dissimilar.len())];
        }
        let anchor = rng.random_range(0..self.count);
        loop {
            let other = rng.random_range(0..self.count);
            if self.labels[other] != self.labels[anchor] {
                return (anchor, other);
            }
        }
    }

    /// Half similar, half dissimilar (odd sizes give the extra pair to the
    /// dissimilar side).
    fn batch(&self, features: &DMatrix<f64>, size: usize, rng: &mut ChaCha8Rng) -> PairBatch {
        let n_similar = size / 2;
        let mut anchors = DMatrix::zeros(features.nrows(), size);
        let mut others = DMatrix::zeros(features.nrows(), size);
        let mut similar = Vec::with_capacity(size);
        for slot in 0..size {
            let want_similar = slot < n_similar;
            let (a, b) = if want_similar {
                self.draw_similar(rng)
            } else {
                self.draw_dissimilar(rng)
            };
            anchors.set_column(slot, &features.column(a));
            others.set_column(slot, &features.column(b));
            similar.push(want_similar);
        }
        PairBatch {
            anchors,
            others,
            similar,
        }
    }
}

/// Everything the shared minibatch loop needs from an encoder family.
trait SiameseColumns: Sized {
    type Grads;
    fn forward_pair(
        &self,
        anchor: &DVector<f64>,
        other: &DVector<f64>,
    ) -> Result<(DVector<f64>, DVector<f64>, ColumnTapes)>;
    fn zero_grads(&self) -> Self::Grads;
    fn accumulate(
        &self,
        tapes: &ColumnTapes,
        ga: &DVector<f64>,
        gb: &DVector<f64>,
        grads: &mut Self::Grads,
    ) -> Result<()>;
    fn step(&self, grads: &mut Self::Grads, inverse_batch: f64, learning_rate: f64)
        -> Result<Self>;
}

enum ColumnTapes {
    Unfolded(ForwardTape, ForwardTape),
    Baseline(BaselineTape, BaselineTape),
}

impl SiameseColumns for EncoderParams {
    type Grads = Gradients;

    fn forward_pair(
        &self,
        anchor: &DVector<f64>,
        other: &DVector<f64>,
    ) -> Result<(DVector<f64>, DVector<f64>, ColumnTapes)> {
        let (xa, ta) = forward(self, anchor, ForwardMode::FixedBias)?;
        let (xb, tb) = forward(self, other, ForwardMode::FixedBias)?;
        Ok((xa, xb, ColumnTapes::Unfolded(ta, tb)))
    }

    fn zero_grads(&self) -> Gradients {
        Gradients::zeros(self)
    }

    fn accumulate(
        &self,
        tapes: &ColumnTapes,
        ga: &DVector<f64>,
        gb: &DVector<f64>,
        grads: &mut Gradients,
    ) -> Result<()> {
        let ColumnTapes::Unfolded(ta, tb) = tapes else {
            return Err(Error::InvalidArgument("tape kind mismatch".into()));
        };
        backprop_column(self, ta, ga, grads);
        backprop_column(self, tb, gb, grads);
        Ok(())
    }

    fn step(
        &self,
        grads: &mut Gradients,
        inverse_batch: f64,
        learning_rate: f64,
    ) -> Result<Self> {
        grads.scale(inverse_batch);
        sgd_step(self, grads, learning_rate)
    }
}

impl SiameseColumns for BaselineParams {
    type Grads = BaselineGradients;

    fn forward_pair(
        &self,
        anchor: &DVector<f64>,
        other: &DVector<f64>,
    ) -> Result<(DVector<f64>, DVector<f64>, ColumnTapes)> {
        let (xa, ta) = forward_baseline_tape(self, anchor)?;
        let (xb, tb) = forward_baseline_tape(self, other)?;
        Ok((xa, xb, ColumnTapes::Baseline(ta, tb)))
    }

    fn zero_grads(&self) -> BaselineGradients {
        BaselineGradients::zeros(self)
    }

    fn accumulate(
        &self,
        tapes: &ColumnTapes,
        ga: &DVector<f64>,
        gb: &DVector<f64>,
        grads: &mut BaselineGradients,
    ) -> Result<()> {
        let ColumnTapes::Baseline(ta, tb) = tapes else {
            return Err(Error::InvalidArgument("tape kind mismatch".into()));
        };
        backward_baseline(self, ta, ga, grads)?;
        backward_baseline(self, tb, gb, grads)?;
        Ok(())
    }

    fn step(
        &self,
        grads: &mut BaselineGradients,
        inverse_batch: f64,
        learning_rate: f64,
    ) -> Result<Self> {
        scale_baseline(grads, inverse_batch);
        baseline_sgd_step(self, grads, learning_rate)
    }
}

fn scale_baseline(grads: &mut BaselineGradients, factor: f64) {
    match grads {
        BaselineGradients::Nnh {
            w1,
            w2,
            w3,
            c1,
            c2,
            c3,
        } => {
            *w1 *= factor;
            *w2 *= factor;
            *w3 *= factor;
            *c1 *= factor;
            *c2 *= factor;
            *c3 *= factor;
        }
        BaselineGradients::Snnh { w, s2, s3, theta } => {
            *w *= factor;
            *s2 *= factor;
            *s3 *= factor;
            *theta *= factor;
        }
    }
}

fn train_loop<E: SiameseColumns>(
    features: &DMatrix<f64>,
    source: &PairSource,
    config: &TrainConfig,
    init: E,
) -> Result<(E, Vec<f64>)> {
    config.validate()?;
    let count = features.ncols();
    if count == 0 {
        return Err(Error::Config("training set is empty".into()));
    }
    let sampler = PairSampler::new(source, count)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params = init;
    let mut history = Vec::with_capacity(config.epochs);
    // One epoch samples as many pairs as there are training points.
    for _ in 0..config.epochs {
        let mut remaining = count;
        let mut epoch_loss = 0.0;
        while remaining > 0 {
            let batch_size = remaining.min(config.batch_size);
            let batch = sampler.batch(features, batch_size, &mut rng);
            let mut grads = params.zero_grads();
            for pair in 0..batch.len() {
                let anchor = batch.anchors.column(pair).clone_owned();
                let other = batch.others.column(pair).clone_owned();
                let (xa, xb, tapes) = params.forward_pair(&anchor, &other)?;
                epoch_loss += pairwise_loss(&xa, &xb, batch.similar[pair], config.margin);
                let (ga, gb) = output_gradients(&xa, &xb, batch.similar[pair], config.margin);
                params.accumulate(&tapes, &ga, &gb, &mut grads)?;
            }
            params = params.step(&mut grads, 1.0 / batch.len() as f64, config.learning_rate)?;
            remaining -= batch_size;
        }
        history.push(epoch_loss / count as f64);
    }
    Ok((params, history))
}

/// Trains the unfolded encoder; returns the final parameters and the
/// per-epoch mean loss. Deterministic for a fixed seed.
pub fn train_siamese(
    features: &DMatrix<f64>,
    source: &PairSource,
    config: &TrainConfig,
    init: EncoderParams,
) -> Result<(EncoderParams, Vec<f64>)> {
    if features.nrows() != init.input_dim() {
        return Err(Error::DimensionMismatch(format!(
            "features have {} rows, encoder expects {}",
            features.nrows(),
            init.input_dim()
        )));
    }
    train_loop(features, source, config, init)
}

/// Trains a baseline encoder with the same pair sampling and loss.
pub fn train_siamese_baseline(
    features: &DMatrix<f64>,
    source: &PairSource,
    config: &TrainConfig,
    init: BaselineParams,
) -> Result<(BaselineParams, Vec<f64>)> {
    if features.nrows() != init.input_dim() {
        return Err(Error::DimensionMismatch(format!(
            "features have {} rows, encoder expects {}",
            features.nrows(),
            init.input_dim()
        )));
    }
    train_loop(features, source, config, init)
}
