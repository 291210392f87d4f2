//! Encoder initialization from a dictionary.

use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use linf_core::dictionary::Dictionary;
use linf_core::encoder::{init_from_dictionary, lambda0_from_calibration};
use linf_core::io;

use super::{write_json, Ctx};
use crate::error::CliError;

#[derive(Debug, Args)]
pub struct InitArgs {
    /// Dictionary file.
    #[arg(long)]
    pub dict: PathBuf,
    /// Calibration feature file (multiplier histories are averaged over it).
    #[arg(long)]
    pub calib: PathBuf,
    /// Unfolded stages K.
    #[arg(long)]
    pub stages: Option<usize>,
    /// Penalty β.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Scale on the median least-squares sup-norm when deriving λ₀.
    #[arg(long)]
    pub lambda_scale: Option<f64>,
    /// Explicit λ₀ (overrides the scale rule).
    #[arg(long)]
    pub lambda0: Option<f64>,
}

#[derive(Debug, Serialize)]
struct InitSummary {
    stages: usize,
    beta: f64,
    lambda0: f64,
    input_dim: usize,
    code_dim: usize,
    calibration_count: usize,
}

pub fn run(args: &InitArgs, ctx: &Ctx) -> Result<(), CliError> {
    let out = ctx.out_dir()?.clone();
    let encoder_section = ctx
        .config
        .as_ref()
        .map(|c| c.encoder.clone())
        .unwrap_or_default();
    let solver_section = ctx
        .config
        .as_ref()
        .map(|c| c.solver.clone())
        .unwrap_or_default();
    let stages = args.stages.unwrap_or(encoder_section.stages);
    let beta = args.beta.unwrap_or(solver_section.beta);
    let lambda_scale = args.lambda_scale.unwrap_or(encoder_section.lambda_scale);

    let dictionary = Dictionary::from_matrix(io::read_vectors(&args.dict)?)?;
    let calibration = io::read_vectors(&args.calib)?;
    let lambda0 = match args.lambda0.or(encoder_section.lambda0) {
        Some(value) => value,
        None => lambda0_from_calibration(&dictionary, &calibration, lambda_scale)?,
    };
    let initialized = init_from_dictionary(&dictionary, beta, lambda0, stages, &calibration)?;

    io::write_model(&out.join("model.bin"), &initialized.params)?;
    write_json(
        &out.join("init_summary.json"),
        &InitSummary {
            stages,
            beta,
            lambda0,
            input_dim: initialized.params.input_dim(),
            code_dim: initialized.params.code_dim(),
            calibration_count: calibration.ncols(),
        },
    )?;
    Ok(())
}
