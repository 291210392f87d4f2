//! Quantization error benchmark.

use clap::Args;

use linf_core::hashing::quantization_experiment;

use super::{write_json, Ctx};
use crate::error::CliError;

#[derive(Debug, Args)]
pub struct QuantbenchArgs {
    /// Signal dimension n.
    #[arg(long)]
    pub signal_dim: usize,
    /// Code dimension N (must be < n).
    #[arg(long)]
    pub code_dim: usize,
    /// Quantization levels L.
    #[arg(long)]
    pub levels: usize,
    #[arg(long)]
    pub trials: usize,
}

pub fn run(args: &QuantbenchArgs, ctx: &Ctx) -> Result<(), CliError> {
    let out = ctx.out_dir()?.clone();
    let seed = ctx.seed()?;
    let report = quantization_experiment(
        args.signal_dim,
        args.code_dim,
        args.levels,
        args.trials,
        seed,
    )?;
    write_json(&out.join("quantbench.json"), &report)?;
    Ok(())
}
