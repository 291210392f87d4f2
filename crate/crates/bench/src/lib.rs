//! Shared instance builders for the benchmark targets.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use linf_core::solver::{least_squares, Problem};

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Gaussian matrix with unit-norm columns.
pub fn unit_column_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut matrix = DMatrix::from_fn(rows, cols, |_, _| normal(&mut rng));
    for j in 0..cols {
        let norm = matrix.column(j).norm();
        matrix.column_mut(j).scale_mut(1.0 / norm);
    }
    matrix
}

pub fn gaussian_vector(len: usize, seed: u64) -> DVector<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DVector::from_fn(len, |_, _| normal(&mut rng))
}

pub fn gaussian_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(rows, cols, |_, _| normal(&mut rng))
}

/// Box-constrained instance with the bound set to 0.8 of the least-squares
/// peak, so the constraint is active.
pub fn active_problem(signal_dim: usize, code_dim: usize, seed: u64) -> Problem {
    let dictionary = unit_column_matrix(signal_dim, code_dim, seed);
    let signal = gaussian_vector(signal_dim, seed.wrapping_add(1));
    let bound = 0.8 * least_squares(&dictionary, &signal).unwrap().amax();
    Problem::new(dictionary, signal, bound).unwrap()
}
