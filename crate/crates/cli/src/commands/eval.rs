//! Retrieval evaluation of stored codes.

use std::path::PathBuf;

use clap::Args;

use linf_core::hashing::{evaluate, RetrievalReport};
use linf_core::io;

use super::{write_json, Ctx};
use crate::error::CliError;

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub query_codes: PathBuf,
    #[arg(long)]
    pub query_labels: PathBuf,
    #[arg(long)]
    pub db_codes: PathBuf,
    #[arg(long)]
    pub db_labels: PathBuf,
    /// Hamming radius for precision/recall.
    #[arg(long)]
    pub radius: Option<usize>,
    /// Rank cutoff for mean precision.
    #[arg(long)]
    pub top_k: Option<usize>,
    /// Code length in bits; defaults to the stored byte width.
    #[arg(long)]
    pub bits: Option<usize>,
}

pub fn report_csv(report: &RetrievalReport) -> String {
    format!(
        "code_length,radius,precision,recall,f1,map,mp_at_k,k\n{},{},{},{},{},{},{},{}\n",
        report.code_length,
        report.radius,
        report.precision,
        report.recall,
        report.f1,
        report.map,
        report.mp_at_k,
        report.k
    )
}

pub fn run(args: &EvalArgs, ctx: &Ctx) -> Result<(), CliError> {
    let out = ctx.out_dir()?.clone();
    let section = ctx
        .config
        .as_ref()
        .map(|c| c.evaluation.clone())
        .unwrap_or_default();
    let radius = args.radius.unwrap_or(section.radius);
    let top_k = args.top_k.unwrap_or(section.top_k);

    let query_codes = io::read_codes(&args.query_codes, args.bits)?;
    let db_codes = io::read_codes(&args.db_codes, args.bits)?;
    let query_labels = io::read_labels(&args.query_labels, query_codes.len())?;
    let db_labels = io::read_labels(&args.db_labels, db_codes.len())?;

    let report = evaluate(
        &query_codes,
        &query_labels,
        &db_codes,
        &db_labels,
        radius,
        top_k,
    )?;
    write_json(&out.join("report.json"), &report)?;
    io::write_atomic(&out.join("report.csv"), report_csv(&report).as_bytes())?;
    Ok(())
}
