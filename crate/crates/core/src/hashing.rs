//! Binary codes, uniform scalar quantization, and Hamming retrieval metrics.
//!
//! Box-constrained representations are nearly antipodal — most entries sit
//! at ±λ — so sign thresholding loses little information, and uniform
//! quantization of the dynamic range [−λ, λ] with L levels keeps the
//! coefficient-domain ℓ₂ error below λ√N/L. An unconstrained least-squares
//! code only admits the dimension-dependent bound √n/L, which is what the
//! quantization experiment measures head to head.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::{admm_solve, least_squares, Problem};

/// A fixed-length binary code.
///
/// Bit 0 packs into the most significant bit of the first byte.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HashCode {
    bits: Vec<bool>,
}

impl HashCode {
    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut bytes = vec![0u8; self.bits.len().div_ceil(8)];
        for (i, &bit) in self.bits.iter().enumerate() {
            if bit {
                bytes[i / 8] |= 0x80 >> (i % 8);
            }
        }
        bytes
    }

    /// Reconstructs a code of `len` bits from packed bytes.
    pub fn from_bytes(bytes: &[u8], len: usize) -> Result<Self> {
        if bytes.len() != len.div_ceil(8) {
            return Err(Error::InvalidArgument(format!(
                "{} bytes cannot hold exactly {len} bits",
                bytes.len()
            )));
        }
        let bits = (0..len)
            .map(|i| bytes[i / 8] & (0x80 >> (i % 8)) != 0)
            .collect();
        Ok(Self { bits })
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.to_bytes())
    }

    /// Parses a hex line; the bit length is `bits` when given, otherwise
    /// every stored bit (a multiple of 8).
    pub fn from_hex(line: &str, bits: Option<usize>) -> Result<Self> {
        let bytes = hex::decode(line.trim())
            .map_err(|e| Error::InvalidArgument(format!("bad hex code line: {e}")))?;
        let len = bits.unwrap_or(bytes.len() * 8);
        if len > bytes.len() * 8 || len.div_ceil(8) != bytes.len() {
            return Err(Error::InvalidArgument(format!(
                "{len} bits do not fit the {}-byte line",
                bytes.len()
            )));
        }
        Self::from_bytes(&bytes, len)
    }
}

/// Sign thresholding: bit i is set when xᵢ ≥ 0.
pub fn binarize(x: &DVector<f64>) -> HashCode {
    HashCode {
        bits: x.iter().map(|&v| v >= 0.0).collect(),
    }
}

/// Bits that differ between two codes of equal length.
pub fn hamming_distance(a: &HashCode, b: &HashCode) -> Result<usize> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "codes have lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(a.bits
        .iter()
        .zip(&b.bits)
        .filter(|(x, y)| x != y)
        .count())
}

/// Uniform mid-rise quantization of [−λ, λ] with L levels.
///
/// Level centers sit at −λ + (2i+1)λ/L, so every in-range coordinate maps
/// to within λ/L of its center; the returned value pairs the quantized
/// vector with the ℓ₂ error, which is at most λ√N/L.
pub fn uniform_quantize(
    x: &DVector<f64>,
    bound: f64,
    levels: usize,
) -> Result<(DVector<f64>, f64)> {
    if !(bound > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "bound must be positive, got {bound}"
        )));
    }
    if levels < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 levels, got {levels}"
        )));
    }
    if x.amax() > bound {
        return Err(Error::InvalidArgument(format!(
            "input exceeds the dynamic range: ‖x‖∞ = {} > {bound}",
            x.amax()
        )));
    }
    let step = 2.0 * bound / levels as f64;
    let quantized = x.map(|v| {
        let cell = (((v + bound) / step).floor() as isize).clamp(0, levels as isize - 1);
        -bound + (2 * cell + 1) as f64 * bound / levels as f64
    });
    let error = (x - &quantized).norm();
    Ok((quantized, error))
}

/// Aggregate record of one quantization trial.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuantizationTrial {
    /// Per-trial dynamic-range bound λ.
    pub lambda: f64,
    /// ℓ₂ coefficient error of the box-constrained code.
    pub error_linf: f64,
    /// λ√N/L for this trial.
    pub bound_linf: f64,
    /// Signal-domain error ‖D(x − x_q)‖₂ for the box-constrained code.
    pub reconstruction_linf: f64,
    /// Signal-domain error for the least-squares code quantized over its
    /// own dynamic range.
    pub reconstruction_ls: f64,
}

/// Report of [`quantization_experiment`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuantizationReport {
    pub signal_dim: usize,
    pub code_dim: usize,
    pub levels: usize,
    pub trials: usize,
    pub seed: u64,
    /// Mean per-trial λ.
    pub mean_lambda: f64,
    /// mean_lambda·√N/L.
    pub bound_linf: f64,
    /// √n/L — what an unconstrained least-squares code can guarantee.
    pub bound_ls: f64,
    pub max_error_linf: f64,
    /// Largest observed error_linf / bound_linf ratio; stays ≤ 1.
    pub max_bound_ratio: f64,
    /// Trials whose box-constrained error exceeded λ√N/L (always 0).
    pub violations: usize,
    pub mean_reconstruction_linf: f64,
    pub mean_reconstruction_ls: f64,
    pub records: Vec<QuantizationTrial>,
}

/// Quantizes box-constrained codes against least-squares codes on a family
/// of random instances.
///
/// Every trial draws a Gaussian dictionary (unit-norm columns) and signal,
/// solves with λ = 0.8·‖x_LS‖∞, and rescales the instance so both code
/// norms are below 1 (the scaling is exact: (y, λ) → (cy, cλ) scales the
/// solution by c). The box-constrained code is quantized over [−λ, λ], the
/// least-squares code over its own dynamic range.
pub fn quantization_experiment(
    signal_dim: usize,
    code_dim: usize,
    levels: usize,
    trials: usize,
    seed: u64,
) -> Result<QuantizationReport> {
    if code_dim >= signal_dim {
        return Err(Error::Config(format!(
            "quantization regime needs code dimension < signal dimension, got {code_dim} ≥ {signal_dim}"
        )));
    }
    if levels < 2 {
        return Err(Error::Config(format!(
            "need at least 2 levels, got {levels}"
        )));
    }
    if trials == 0 {
        return Err(Error::Config("need at least one trial".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(trials);
    let mut violations = 0;
    let mut max_error: f64 = 0.0;
    let mut max_ratio: f64 = 0.0;
    let mut lambda_sum = 0.0;
    let mut recon_linf_sum = 0.0;
    let mut recon_ls_sum = 0.0;
    for _ in 0..trials {
        let mut dict = DMatrix::from_fn(signal_dim, code_dim, |_, _| {
            <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
        });
        for j in 0..code_dim {
            let norm = dict.column(j).norm();
            dict.column_mut(j).scale_mut(1.0 / norm);
        }
        let signal = DVector::from_fn(signal_dim, |_, _| {
            <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
        });
        let ls = least_squares(&dict, &signal)?;
        let lambda_raw = 0.8 * ls.amax();
        let problem = Problem::new(dict.clone(), signal, lambda_raw)?;
        let (solved, _) = admm_solve(&problem, 5000, 1e-12)?;

        // Rescale so both code norms sit below 1.
        let scale = 0.99 / solved.x_star.norm().max(ls.norm()).max(1.0);
        let x_inf = &solved.x_star * scale;
        let x_ls = &ls * scale;
        let lambda = lambda_raw * scale;

        let (q_inf, error_linf) = uniform_quantize(&x_inf, lambda, levels)?;
        let bound_linf = lambda * (code_dim as f64).sqrt() / levels as f64;
        if error_linf > bound_linf {
            violations += 1;
        }
        let ls_range = x_ls.amax();
        let (q_ls, _) = uniform_quantize(&x_ls, ls_range.max(f64::MIN_POSITIVE), levels)?;
        let reconstruction_linf = (&dict * (&x_inf - q_inf)).norm();
        let reconstruction_ls = (&dict * (&x_ls - q_ls)).norm();

        max_error = max_error.max(error_linf);
        max_ratio = max_ratio.max(error_linf / bound_linf);
        lambda_sum += lambda;
        recon_linf_sum += reconstruction_linf;
        recon_ls_sum += reconstruction_ls;
        records.push(QuantizationTrial {
            lambda,
            error_linf,
            bound_linf,
            reconstruction_linf,
            reconstruction_ls,
        });
    }
    let mean_lambda = lambda_sum / trials as f64;
    Ok(QuantizationReport {
        signal_dim,
        code_dim,
        levels,
        trials,
        seed,
        mean_lambda,
        bound_linf: mean_lambda * (code_dim as f64).sqrt() / levels as f64,
        bound_ls: (signal_dim as f64).sqrt() / levels as f64,
        max_error_linf: max_error,
        max_bound_ratio: max_ratio,
        violations,
        mean_reconstruction_linf: recon_linf_sum / trials as f64,
        mean_reconstruction_ls: recon_ls_sum / trials as f64,
        records,
    })
}

/// Retrieval quality at one code length.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RetrievalReport {
    pub code_length: usize,
    pub radius: usize,
    /// Mean over queries of within-radius precision; queries retrieving
    /// nothing contribute 0.
    pub precision: f64,
    /// Mean over queries of within-radius recall.
    pub recall: f64,
    /// Harmonic mean of precision and recall, 0 when either is 0.
    pub f1: f64,
    /// Mean average precision over the full Hamming-ranked list, ties
    /// broken by database index.
    pub map: f64,
    /// Mean precision of the top-k ranked items.
    pub mp_at_k: f64,
    pub k: usize,
}

/// Labels-as-relevance retrieval evaluation: two items are relevant to each
/// other exactly when their labels are equal.
pub fn evaluate(
    query_codes: &[HashCode],
    query_labels: &[i64],
    database_codes: &[HashCode],
    database_labels: &[i64],
    radius: usize,
    k: usize,
) -> Result<RetrievalReport> {
    if query_codes.len() != query_labels.len() {
        return Err(Error::Config(format!(
            "{} query codes but {} query labels",
            query_codes.len(),
            query_labels.len()
        )));
    }
    if database_codes.len() != database_labels.len() {
        return Err(Error::Config(format!(
            "{} database codes but {} database labels",
            database_codes.len(),
            database_labels.len()
        )));
    }
    evaluate_by(query_codes, database_codes, radius, k, |q, d| {
        query_labels[q] == database_labels[d]
    })
}

/// Retrieval evaluation under an arbitrary relevance predicate.
pub fn evaluate_by<F>(
    query_codes: &[HashCode],
    database_codes: &[HashCode],
    radius: usize,
    k: usize,
    relevant: F,
) -> Result<RetrievalReport>
where
    F: Fn(usize, usize) -> bool,
{
    if query_codes.is_empty() {
        return Err(Error::Config("query set is empty".into()));
    }
    if database_codes.is_empty() {
        return Err(Error::Config("database is empty".into()));
    }
    if k == 0 {
        return Err(Error::Config("top-k must be at least 1".into()));
    }
    let code_length = query_codes[0].len();
    let mut precision_sum = 0.0;
    let mut recall_sum = 0.0;
    let mut ap_sum = 0.0;
    let mut mp_sum = 0.0;
    for (q, query) in query_codes.iter().enumerate() {
        // Bucket the database by distance: iterating buckets in order with
        // in-bucket index order is exactly the stable (distance, index) rank.
        let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); code_length + 1];
        let mut retrieved = 0usize;
        let mut retrieved_relevant = 0usize;
        let mut total_relevant = 0usize;
        for (d, code) in database_codes.iter().enumerate() {
            let distance = hamming_distance(query, code)?;
            let is_relevant = relevant(q, d);
            total_relevant += usize::from(is_relevant);
            if distance <= radius {
                retrieved += 1;
                retrieved_relevant += usize::from(is_relevant);
            }
            buckets[distance].push(d);
        }
        if retrieved > 0 {
            precision_sum += retrieved_relevant as f64 / retrieved as f64;
        }
        if total_relevant > 0 {
            recall_sum += retrieved_relevant as f64 / total_relevant as f64;
        }

        let top = k.min(database_codes.len());
        let mut rank = 0usize;
        let mut hits = 0usize;
        let mut hits_at_k = 0usize;
        let mut ap = 0.0;
        for bucket in &buckets {
            for &d in bucket {
                rank += 1;
                if relevant(q, d) {
                    hits += 1;
                    ap += hits as f64 / rank as f64;
                }
                if rank == top {
                    hits_at_k = hits;
                }
            }
        }
        mp_sum += hits_at_k as f64 / top as f64;
        if total_relevant > 0 {
            ap_sum += ap / total_relevant as f64;
        }
    }
    let queries = query_codes.len() as f64;
    let precision = precision_sum / queries;
    let recall = recall_sum / queries;
    let f1 = if precision > 0.0 && recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(RetrievalReport {
        code_length,
        radius,
        precision,
        recall,
        f1,
        map: ap_sum / queries,
        mp_at_k: mp_sum / queries,
        k,
    })
}
