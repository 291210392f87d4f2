//! Batch encoding into binary codes.

use std::path::PathBuf;

use clap::Args;
use nalgebra::DMatrix;

use linf_core::encoder::{forward, ForwardMode};
use linf_core::hashing::binarize;
use linf_core::io;

use super::{ordered_map, Ctx};
use crate::error::CliError;

#[derive(Debug, Args)]
pub struct EncodeArgs {
    /// Encoder model file.
    #[arg(long)]
    pub model: PathBuf,
    /// Input feature file.
    #[arg(long)]
    pub input: PathBuf,
    /// Also write the real-valued representations.
    #[arg(long)]
    pub raw: bool,
}

pub fn run(args: &EncodeArgs, ctx: &Ctx) -> Result<(), CliError> {
    let out = ctx.out_dir()?.clone();
    let params = io::read_model(&args.model)?;
    let signals = io::read_vectors(&args.input)?;

    let columns: Vec<usize> = (0..signals.ncols()).collect();
    let outputs = ordered_map(columns, ctx.threads, |m| {
        let (code, _) = forward(
            &params,
            &signals.column(m).clone_owned(),
            ForwardMode::FixedBias,
        )?;
        Ok(code)
    })?;

    let codes: Vec<_> = outputs.iter().map(binarize).collect();
    io::write_codes(&out.join("codes.hex"), &codes)?;
    if args.raw {
        let mut representations = DMatrix::zeros(params.code_dim(), outputs.len());
        for (m, x) in outputs.iter().enumerate() {
            representations.set_column(m, x);
        }
        io::write_vectors(&out.join("representations.bin"), &representations)?;
    }
    Ok(())
}
