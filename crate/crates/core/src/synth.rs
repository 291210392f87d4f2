//! Seeded synthetic dataset generators.
//!
//! Desk-scale stand-ins for real descriptor datasets: labeled Gaussian
//! clusters for retrieval experiments, and signals drawn from a hidden
//! dictionary for recovery tests.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dictionary::Dictionary;
use crate::error::{Error, Result};

/// Isotropic Gaussian blobs (σ = 1) with the given center separation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClustersSpec {
    pub dim: usize,
    pub classes: usize,
    /// Pairwise distance between class centers, in units of the noise σ.
    pub separation: f64,
}

/// Samples `count` labeled points, assigned to classes round-robin.
///
/// Two classes get exactly antipodal centers at distance `separation`; more
/// classes get random directions scaled so expected pairwise distances match.
pub fn clusters(spec: &ClustersSpec, count: usize, seed: u64) -> Result<(DMatrix<f64>, Vec<i64>)> {
    if spec.dim == 0 || spec.classes == 0 {
        return Err(Error::Config(
            "cluster dimension and class count must be positive".into(),
        ));
    }
    if count == 0 {
        return Err(Error::Config("cannot generate an empty dataset".into()));
    }
    if spec.separation < 0.0 {
        return Err(Error::Config("separation must be nonnegative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers = class_centers(spec, &mut rng);
    let mut features = DMatrix::zeros(spec.dim, count);
    let mut labels = Vec::with_capacity(count);
    for m in 0..count {
        let class = m % spec.classes;
        let noise = DVector::from_fn(spec.dim, |_, _| StandardNormal.sample(&mut rng));
        features.set_column(m, &(&centers[class] + noise));
        labels.push(class as i64);
    }
    Ok((features, labels))
}

fn class_centers(spec: &ClustersSpec, rng: &mut ChaCha8Rng) -> Vec<DVector<f64>> {
    if spec.classes == 1 {
        return vec![DVector::zeros(spec.dim)];
    }
    if spec.classes == 2 {
        let mut direction = DVector::from_fn(spec.dim, |_, _| StandardNormal.sample(rng));
        direction /= direction.norm();
        let half = &direction * (spec.separation / 2.0);
        return vec![half.clone(), -half];
    }
    // Random directions with norm separation/√2 give expected pairwise
    // distances close to the requested separation.
    (0..spec.classes)
        .map(|_| {
            let mut direction: DVector<f64> =
                DVector::from_fn(spec.dim, |_, _| StandardNormal.sample(rng));
            direction /= direction.norm();
            direction * (spec.separation / std::f64::consts::SQRT_2)
        })
        .collect()
}

/// Signals synthesized from a hidden low-coherence dictionary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrameRecoverySpec {
    pub signal_dim: usize,
    pub atoms: usize,
    /// Nonzeros per generating code.
    pub sparsity: usize,
    /// Upper bound on the hidden dictionary's mutual coherence; candidates
    /// are redrawn until they satisfy it.
    pub max_coherence: f64,
}

/// Generates `count` signals y = D₀c with T-sparse codes whose amplitudes
/// are uniform in ±[1, 2]; returns the signals and the hidden dictionary.
pub fn frame_recovery(
    spec: &FrameRecoverySpec,
    count: usize,
    seed: u64,
) -> Result<(DMatrix<f64>, Dictionary)> {
    if count == 0 {
        return Err(Error::Config("cannot generate an empty dataset".into()));
    }
    if spec.sparsity == 0 || spec.sparsity > spec.atoms {
        return Err(Error::Config(format!(
            "need 1 ≤ sparsity ≤ atoms, got sparsity {} atoms {}",
            spec.sparsity, spec.atoms
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hidden = low_coherence_dictionary(spec, &mut rng)?;
    let mut signals = DMatrix::zeros(spec.signal_dim, count);
    for m in 0..count {
        let mut code = DVector::zeros(spec.atoms);
        let mut chosen: Vec<usize> = Vec::with_capacity(spec.sparsity);
        while chosen.len() < spec.sparsity {
            let atom = rng.random_range(0..spec.atoms);
            if !chosen.contains(&atom) {
                chosen.push(atom);
            }
        }
        for atom in chosen {
            let amplitude = 1.0 + rng.random::<f64>();
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            code[atom] = sign * amplitude;
        }
        signals.set_column(m, &(hidden.matrix() * code));
    }
    Ok((signals, hidden))
}

fn low_coherence_dictionary(spec: &FrameRecoverySpec, rng: &mut ChaCha8Rng) -> Result<Dictionary> {
    const ATTEMPTS: usize = 1000;
    for _ in 0..ATTEMPTS {
        let matrix = DMatrix::from_fn(spec.signal_dim, spec.atoms, |_, _| {
            StandardNormal.sample(rng)
        });
        let candidate = Dictionary::normalized(matrix)?;
        if candidate.coherence() < spec.max_coherence {
            return Ok(candidate);
        }
    }
    Err(Error::Numeric(format!(
        "no dictionary with coherence < {} found in {ATTEMPTS} draws",
        spec.max_coherence
    )))
}
