//! Siamese training stage.

use std::path::PathBuf;

use clap::Args;

use linf_core::io;
use linf_core::training::{train_siamese, PairSource};

use super::Ctx;
use crate::error::CliError;

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Initial encoder model.
    #[arg(long)]
    pub model: PathBuf,
    /// Training feature file.
    #[arg(long)]
    pub data: PathBuf,
    /// Label file (pairs drawn from same/different-label pools).
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Explicit pair file; wins over --labels.
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub margin: Option<f64>,
}

pub fn run(args: &TrainArgs, ctx: &Ctx) -> Result<(), CliError> {
    let out = ctx.out_dir()?.clone();
    let seed = ctx.seed()?;
    let section = ctx
        .config
        .as_ref()
        .map(|c| c.training.clone())
        .unwrap_or_default();
    let mut config = section.to_core(seed);
    if let Some(epochs) = args.epochs {
        config.epochs = epochs;
    }
    if let Some(lr) = args.learning_rate {
        config.learning_rate = lr;
    }
    if let Some(batch) = args.batch_size {
        config.batch_size = batch;
    }
    if let Some(margin) = args.margin {
        config.margin = margin;
    }

    let init = io::read_model(&args.model)?;
    let features = io::read_vectors(&args.data)?;
    let source = match (&args.pairs, &args.labels) {
        (Some(pairs_path), _) => PairSource::Pairs(io::read_pairs(pairs_path)?),
        (None, Some(labels_path)) => {
            PairSource::Labels(io::read_labels(labels_path, features.ncols())?)
        }
        (None, None) => {
            return Err(CliError::Config(
                "training needs --labels or --pairs".into(),
            ))
        }
    };

    let (trained, history) = train_siamese(&features, &source, &config, init)?;
    io::write_model(&out.join("model.bin"), &trained)?;
    io::write_loss_history(&out.join("loss_history.csv"), &history)?;
    Ok(())
}
