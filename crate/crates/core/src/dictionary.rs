//! K-SVD dictionary learning with orthogonal matching pursuit.
//!
//! The learned dictionary provides the starting point for encoder
//! initialization; a random normalized dictionary is available as a cheap
//! fallback when learning cost is unwanted.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A frame with unit-norm columns, n×N with N ≤ n.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    matrix: DMatrix<f64>,
}

impl Dictionary {
    /// Wraps a matrix whose columns are already unit-norm (within 1e-6).
    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        Self::validate_shape(&matrix)?;
        for j in 0..matrix.ncols() {
            let norm = matrix.column(j).norm();
            if (norm - 1.0).abs() > 1e-6 {
                return Err(Error::InvalidArgument(format!(
                    "column {j} has norm {norm}, expected 1"
                )));
            }
        }
        Ok(Self { matrix })
    }

    /// Normalizes every column to unit norm; all-zero columns are rejected.
    pub fn normalized(mut matrix: DMatrix<f64>) -> Result<Self> {
        Self::validate_shape(&matrix)?;
        for j in 0..matrix.ncols() {
            let norm = matrix.column(j).norm();
            if norm == 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "column {j} is all zero and cannot be normalized"
                )));
            }
            matrix.column_mut(j).scale_mut(1.0 / norm);
        }
        Ok(Self { matrix })
    }

    /// Gaussian dictionary with normalized columns.
    pub fn random(signal_dim: usize, atoms: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let matrix = DMatrix::from_fn(signal_dim, atoms, |_, _| StandardNormal.sample(&mut rng));
        Self::normalized(matrix)
    }

    fn validate_shape(matrix: &DMatrix<f64>) -> Result<()> {
        if matrix.nrows() == 0 || matrix.ncols() == 0 {
            return Err(Error::InvalidArgument("dictionary is empty".into()));
        }
        if matrix.ncols() > matrix.nrows() {
            return Err(Error::InvalidArgument(format!(
                "dictionary must be tall: got {}×{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if !matrix.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument(
                "dictionary entries must be finite".into(),
            ));
        }
        Ok(())
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    pub fn signal_dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn atoms(&self) -> usize {
        self.matrix.ncols()
    }

    /// Largest absolute inner product between distinct atoms.
    pub fn coherence(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.atoms() {
            for j in (i + 1)..self.atoms() {
                worst = worst.max(self.matrix.column(i).dot(&self.matrix.column(j)).abs());
            }
        }
        worst
    }
}

/// K-SVD hyperparameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KsvdConfig {
    /// Number of atoms N.
    pub atoms: usize,
    /// Nonzeros per sparse code in the matching-pursuit step.
    pub sparsity: usize,
    /// Alternation sweeps.
    pub iterations: usize,
    pub seed: u64,
}

impl KsvdConfig {
    /// Defaults: sparsity max(1, atoms/8), 30 sweeps.
    pub fn new(atoms: usize, seed: u64) -> Self {
        Self {
            atoms,
            sparsity: (atoms / 8).max(1),
            iterations: 30,
            seed,
        }
    }

    fn validate(&self, signal_dim: usize) -> Result<()> {
        if self.atoms == 0 || self.sparsity == 0 || self.sparsity > self.atoms {
            return Err(Error::Config(format!(
                "need 1 ≤ sparsity ≤ atoms, got sparsity {} atoms {}",
                self.sparsity, self.atoms
            )));
        }
        if self.atoms > signal_dim {
            return Err(Error::Config(format!(
                "atoms {} exceeds signal dimension {signal_dim}",
                self.atoms
            )));
        }
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be at least 1".into()));
        }
        Ok(())
    }
}

/// Learning outcome: the dictionary plus the reconstruction-error sequence
/// ½‖Y − DC‖_F² recorded after each sweep.
#[derive(Debug, Clone)]
pub struct KsvdResult {
    pub dictionary: Dictionary,
    pub reconstruction_errors: Vec<f64>,
}

/// Greedy orthogonal matching pursuit: `max_nonzeros` rounds of
/// max-correlation atom selection, each followed by a least-squares refit on
/// the active set.
///
/// Correlation ties break toward the lowest atom index; a round whose best
/// remaining correlation is exactly zero stops the pursuit, so an all-zero
/// signal (or one orthogonal to every atom) codes to the zero vector.
pub fn omp_sparse_code(
    dictionary: &Dictionary,
    signal: &DVector<f64>,
    max_nonzeros: usize,
) -> Result<DVector<f64>> {
    if signal.len() != dictionary.signal_dim() {
        return Err(Error::DimensionMismatch(format!(
            "signal has length {} but dictionary has {} rows",
            signal.len(),
            dictionary.signal_dim()
        )));
    }
    if max_nonzeros == 0 || max_nonzeros > dictionary.atoms() {
        return Err(Error::InvalidArgument(format!(
            "need 1 ≤ max_nonzeros ≤ {}, got {max_nonzeros}",
            dictionary.atoms()
        )));
    }
    let d = dictionary.matrix();
    let mut residual = signal.clone();
    let mut support: Vec<usize> = Vec::with_capacity(max_nonzeros);
    let mut coefficients = DVector::zeros(dictionary.atoms());
    for _ in 0..max_nonzeros {
        let mut best_atom = None;
        let mut best_corr = 0.0;
        for j in 0..dictionary.atoms() {
            if support.contains(&j) {
                continue;
            }
            let corr = d.column(j).dot(&residual).abs();
            if corr > best_corr {
                best_corr = corr;
                best_atom = Some(j);
            }
        }
        let Some(atom) = best_atom else { break };
        support.push(atom);

        let mut active = DMatrix::zeros(d.nrows(), support.len());
        for (k, &j) in support.iter().enumerate() {
            active.set_column(k, &d.column(j));
        }
        let fit = active
            .clone()
            .svd(true, true)
            .solve(signal, 1e-12)
            .map_err(|e| Error::Numeric(format!("OMP least-squares refit failed: {e}")))?;
        residual = signal - active * &fit;
        coefficients.fill(0.0);
        for (k, &j) in support.iter().enumerate() {
            coefficients[j] = fit[(k, 0)];
        }
    }
    Ok(coefficients)
}

/// Alternates sparse coding of every column with per-atom rank-1 updates.
///
/// Unused atoms are re-seeded from the worst-reconstructed column. The
/// coding step keeps a column's previous code whenever recoding would raise
/// its residual, which makes the recorded reconstruction-error sequence
/// non-increasing by construction.
pub fn ksvd_learn(data: &DMatrix<f64>, config: &KsvdConfig) -> Result<KsvdResult> {
    config.validate(data.nrows())?;
    if data.ncols() < config.atoms {
        return Err(Error::Config(format!(
            "need at least {} data columns, got {}",
            config.atoms,
            data.ncols()
        )));
    }
    for j in 0..data.ncols() {
        if data.column(j).norm() == 0.0 {
            return Err(Error::InvalidArgument(format!(
                "data column {j} is all zero"
            )));
        }
    }

    let samples = data.ncols();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut picks: Vec<usize> = (0..samples).collect();
    picks.shuffle(&mut rng);
    let mut atoms_matrix = DMatrix::zeros(data.nrows(), config.atoms);
    for (k, &j) in picks.iter().take(config.atoms).enumerate() {
        let column = data.column(j);
        atoms_matrix.set_column(k, &(column / column.norm()));
    }
    let mut dictionary = Dictionary {
        matrix: atoms_matrix,
    };
    let mut codes = DMatrix::zeros(config.atoms, samples);
    let mut errors = Vec::with_capacity(config.iterations);

    for sweep in 0..config.iterations {
        // Sparse coding, guarded so the objective cannot go up.
        for m in 0..samples {
            let signal = data.column(m).clone_owned();
            let fresh = omp_sparse_code(&dictionary, &signal, config.sparsity)?;
            if sweep == 0 {
                codes.set_column(m, &fresh);
                continue;
            }
            let old = codes.column(m).clone_owned();
            let fresh_residual = (&signal - dictionary.matrix() * &fresh).norm();
            let old_residual = (&signal - dictionary.matrix() * &old).norm();
            if fresh_residual <= old_residual {
                codes.set_column(m, &fresh);
            }
        }

        // Atom updates.
        for k in 0..config.atoms {
            let usage: Vec<usize> = (0..samples).filter(|&m| codes[(k, m)] != 0.0).collect();
            if usage.is_empty() {
                let worst = worst_reconstructed_column(data, dictionary.matrix(), &codes);
                let column = data.column(worst);
                dictionary.matrix.set_column(k, &(column / column.norm()));
                continue;
            }
            // Residual with atom k removed, restricted to the columns using it.
            let mut restricted = DMatrix::zeros(data.nrows(), usage.len());
            for (c, &m) in usage.iter().enumerate() {
                let mut column = data.column(m).clone_owned();
                for j in 0..config.atoms {
                    if j != k && codes[(j, m)] != 0.0 {
                        column -= dictionary.matrix.column(j) * codes[(j, m)];
                    }
                }
                restricted.set_column(c, &column);
            }
            let svd = restricted.svd(true, true);
            let u = svd.u.as_ref().expect("SVD with u requested");
            let v_t = svd.v_t.as_ref().expect("SVD with vᵀ requested");
            let sigma = svd.singular_values[0];
            dictionary.matrix.set_column(k, &u.column(0));
            for (c, &m) in usage.iter().enumerate() {
                codes[(k, m)] = sigma * v_t[(0, c)];
            }
        }

        errors.push(0.5 * (data - dictionary.matrix() * &codes).norm_squared());
    }

    Ok(KsvdResult {
        dictionary,
        reconstruction_errors: errors,
    })
}

fn worst_reconstructed_column(
    data: &DMatrix<f64>,
    dictionary: &DMatrix<f64>,
    codes: &DMatrix<f64>,
) -> usize {
    let mut worst = 0;
    let mut worst_error = -1.0;
    for m in 0..data.ncols() {
        let err = (data.column(m) - dictionary * codes.column(m)).norm();
        if err > worst_error {
            worst_error = err;
            worst = m;
        }
    }
    worst
}
