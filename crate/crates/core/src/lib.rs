//! Library for ℓ∞-constrained signal representations and binary hashing.
//!
//! The pipeline implemented here:
//!
//! 1. [`solver`] — exact and truncated ADMM for the box-constrained
//!    least-squares problem, plus an independent projected-gradient oracle.
//! 2. [`dictionary`] — K-SVD dictionary learning with orthogonal matching
//!    pursuit as the sparse-coding step.
//! 3. [`encoder`] — the unfolded solver as a feed-forward encoder with
//!    bounded-linear-unit activations, plus baseline encoder architectures.
//! 4. [`training`] — siamese pairwise-loss training of encoder pairs by
//!    plain minibatch SGD.
//! 5. [`hashing`] — binarization, uniform scalar quantization with its error
//!    analysis, and Hamming-ranking retrieval metrics.
//!
//! [`synth`] generates the seeded synthetic datasets used throughout the
//! test suites, and [`io`] defines the on-disk formats shared with the CLI.

pub mod dictionary;
pub mod encoder;
pub mod error;
pub mod hashing;
pub mod io;
pub mod solver;
pub mod synth;
pub mod training;

pub use dictionary::{Dictionary, KsvdConfig};
pub use encoder::{EncoderParams, ForwardMode, ForwardTape, NeuronKind};
pub use error::{Error, Result};
pub use hashing::{HashCode, RetrievalReport};
pub use solver::{AdmmState, Problem, SolverResult};
pub use training::{Gradients, PairBatch, TrainConfig};
