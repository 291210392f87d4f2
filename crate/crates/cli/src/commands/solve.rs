//! Batch box-constrained solves over a dataset.

use std::path::PathBuf;

use clap::Args;
use nalgebra::DMatrix;
use serde::Serialize;

use linf_core::io;
use linf_core::solver::{admm_solve, Problem};

use super::{ordered_map, write_json, Ctx};
use crate::error::CliError;

/// Entries at or above this fraction of the bound count as saturated in
/// the summary.
const SATURATION_RATIO: f64 = 0.95;

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Input vector-set file.
    #[arg(long)]
    pub input: PathBuf,
    /// Dictionary vector-set file (atoms as columns).
    #[arg(long)]
    pub dict: PathBuf,
    /// Box bound λ.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Penalty β.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Residual stopping tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Iteration budget per signal.
    #[arg(long)]
    pub max_iter: Option<usize>,
}

#[derive(Debug, Serialize)]
struct SolveSummary {
    count: usize,
    lambda: f64,
    beta: f64,
    tol: f64,
    max_iter: usize,
    mean_objective: f64,
    mean_sup_norm: f64,
    /// Fraction of output entries with |xᵢ| ≥ 0.95λ.
    saturation_fraction: f64,
    converged: usize,
}

pub fn run(args: &SolveArgs, ctx: &Ctx) -> Result<(), CliError> {
    let out = ctx.out_dir()?.clone();
    let solver_config = ctx
        .config
        .as_ref()
        .map(|c| c.solver.clone())
        .unwrap_or_default();
    let lambda = args
        .lambda
        .or(solver_config.lambda)
        .ok_or_else(|| CliError::Config("a box bound is required: pass --lambda".into()))?;
    let beta = args.beta.unwrap_or(solver_config.beta);
    let tol = args.tol.unwrap_or(solver_config.tol);
    let max_iter = args.max_iter.unwrap_or(solver_config.max_iter);

    let signals = io::read_vectors(&args.input)?;
    let dictionary = io::read_vectors(&args.dict)?;
    if signals.nrows() != dictionary.nrows() {
        return Err(CliError::Config(format!(
            "signals have dimension {} but dictionary atoms have dimension {}",
            signals.nrows(),
            dictionary.nrows()
        )));
    }

    let columns: Vec<usize> = (0..signals.ncols()).collect();
    let solved = ordered_map(columns, ctx.threads, |m| {
        let problem = Problem::with_penalty(
            dictionary.clone(),
            signals.column(m).clone_owned(),
            lambda,
            beta,
        )?;
        let (result, _) = admm_solve(&problem, max_iter, tol)?;
        Ok(result)
    })?;

    let code_dim = dictionary.ncols();
    let mut representations = DMatrix::zeros(code_dim, solved.len());
    let mut objective_sum = 0.0;
    let mut sup_norm_sum = 0.0;
    let mut saturated = 0usize;
    let mut converged = 0usize;
    for (m, result) in solved.iter().enumerate() {
        representations.set_column(m, &result.x_star);
        objective_sum += result.objective;
        sup_norm_sum += result.x_star.amax();
        saturated += result
            .x_star
            .iter()
            .filter(|v| v.abs() >= SATURATION_RATIO * lambda)
            .count();
        converged += usize::from(result.converged);
    }
    let count = solved.len();
    let entries = (count * code_dim).max(1);

    io::write_vectors(&out.join("representations.bin"), &representations)?;
    write_json(
        &out.join("solve_summary.json"),
        &SolveSummary {
            count,
            lambda,
            beta,
            tol,
            max_iter,
            mean_objective: objective_sum / count.max(1) as f64,
            mean_sup_norm: sup_norm_sum / count.max(1) as f64,
            saturation_fraction: saturated as f64 / entries as f64,
            converged,
        },
    )?;
    Ok(())
}
