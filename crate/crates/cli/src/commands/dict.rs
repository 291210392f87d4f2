//! Dictionary learning stage.

use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use linf_core::dictionary::{ksvd_learn, Dictionary, KsvdConfig};
use linf_core::io;

use super::{write_json, Ctx};
use crate::config::DictKind;
use crate::error::CliError;

#[derive(Debug, Args)]
pub struct DictArgs {
    /// Training feature file.
    #[arg(long)]
    pub input: PathBuf,
    /// Number of atoms.
    #[arg(long)]
    pub atoms: Option<usize>,
    /// Nonzeros per code in the pursuit step.
    #[arg(long)]
    pub sparsity: Option<usize>,
    /// Learning sweeps.
    #[arg(long)]
    pub iterations: Option<usize>,
    /// `ksvd` to learn, `random` for a Gaussian fallback.
    #[arg(long)]
    pub kind: Option<String>,
    /// Subtract the per-feature mean before learning.
    #[arg(long)]
    pub mean_removal: bool,
}

#[derive(Debug, Serialize)]
struct DictSummary {
    atoms: usize,
    signal_dim: usize,
    kind: &'static str,
    mean_removal: bool,
    coherence: f64,
    reconstruction_errors: Vec<f64>,
}

pub fn run(args: &DictArgs, ctx: &Ctx) -> Result<(), CliError> {
    let out = ctx.out_dir()?.clone();
    let seed = ctx.seed()?;
    let section = ctx.config.as_ref().map(|c| c.dictionary.clone());
    let atoms = args
        .atoms
        .or(section.as_ref().map(|d| d.atoms))
        .ok_or_else(|| CliError::Config("the atom count is required: pass --atoms".into()))?;
    let sparsity = args
        .sparsity
        .or(section.as_ref().and_then(|d| d.sparsity))
        .unwrap_or((atoms / 8).max(1));
    let iterations = args
        .iterations
        .or(section.as_ref().map(|d| d.iterations))
        .unwrap_or(30);
    let kind = match args.kind.as_deref() {
        Some("ksvd") => DictKind::Ksvd,
        Some("random") => DictKind::Random,
        Some(other) => {
            return Err(CliError::Config(format!(
                "unknown dictionary kind {other:?}: expected ksvd or random"
            )))
        }
        None => section
            .as_ref()
            .map(|d| d.kind)
            .unwrap_or(DictKind::Ksvd),
    };
    let mean_removal = args.mean_removal
        || section.as_ref().map(|d| d.mean_removal).unwrap_or(false);

    let mut data = io::read_vectors(&args.input)?;
    if mean_removal {
        for i in 0..data.nrows() {
            let mean = data.row(i).sum() / data.ncols() as f64;
            for m in 0..data.ncols() {
                data[(i, m)] -= mean;
            }
        }
    }

    let (dictionary, errors, kind_name) = match kind {
        DictKind::Ksvd => {
            let result = ksvd_learn(
                &data,
                &KsvdConfig {
                    atoms,
                    sparsity,
                    iterations,
                    seed,
                },
            )?;
            (result.dictionary, result.reconstruction_errors, "ksvd")
        }
        DictKind::Random => (
            Dictionary::random(data.nrows(), atoms, seed)?,
            Vec::new(),
            "random",
        ),
    };

    io::write_vectors(&out.join("dictionary.bin"), dictionary.matrix())?;
    write_json(
        &out.join("dict_summary.json"),
        &DictSummary {
            atoms,
            signal_dim: dictionary.signal_dim(),
            kind: kind_name,
            mean_removal,
            coherence: dictionary.coherence(),
            reconstruction_errors: errors,
        },
    )?;
    Ok(())
}
