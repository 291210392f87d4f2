//! Seeded synthetic dataset generation.

use clap::{Args, Subcommand};

use linf_core::io;
use linf_core::synth;

use super::Ctx;
use crate::error::CliError;

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(subcommand)]
    pub kind: SynthKind,
}

#[derive(Debug, Subcommand)]
pub enum SynthKind {
    /// Labeled isotropic Gaussian blobs → features.bin + labels.csv.
    Clusters {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        classes: usize,
        /// Distance between class centers in units of the noise σ.
        #[arg(long)]
        separation: f64,
        #[arg(long)]
        count: usize,
    },
    /// Signals from a hidden low-coherence dictionary → signals.bin +
    /// hidden_dictionary.bin.
    FrameRecovery {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        atoms: usize,
        /// Nonzeros per generating code.
        #[arg(long, default_value_t = 1)]
        sparsity: usize,
        #[arg(long, default_value_t = 0.5)]
        max_coherence: f64,
        #[arg(long)]
        count: usize,
    },
}

pub fn run(args: &SynthArgs, ctx: &Ctx) -> Result<(), CliError> {
    let out = ctx.out_dir()?.clone();
    let seed = ctx.seed()?;
    match &args.kind {
        SynthKind::Clusters {
            dim,
            classes,
            separation,
            count,
        } => {
            let spec = synth::ClustersSpec {
                dim: *dim,
                classes: *classes,
                separation: *separation,
            };
            let (features, labels) = synth::clusters(&spec, *count, seed)?;
            io::write_vectors(&out.join("features.bin"), &features)?;
            io::write_labels(&out.join("labels.csv"), &labels)?;
        }
        SynthKind::FrameRecovery {
            dim,
            atoms,
            sparsity,
            max_coherence,
            count,
        } => {
            let spec = synth::FrameRecoverySpec {
                signal_dim: *dim,
                atoms: *atoms,
                sparsity: *sparsity,
                max_coherence: *max_coherence,
            };
            let (signals, hidden) = synth::frame_recovery(&spec, *count, seed)?;
            io::write_vectors(&out.join("signals.bin"), &signals)?;
            io::write_vectors(&out.join("hidden_dictionary.bin"), hidden.matrix())?;
        }
    }
    Ok(())
}
