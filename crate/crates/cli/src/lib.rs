//! `linf` — experiment orchestration for box-constrained encoding and
//! binary hashing.
//!
//! Subcommands cover the individual stages (`solve`, `synth`, `dict`,
//! `init`, `train`, `encode`, `eval`, `quantbench`) and the end-to-end
//! `pipeline`. Every command is deterministic given its configuration and
//! seed; flag values override the JSON config, which overrides built-in
//! defaults.

pub mod commands;
pub mod config;
pub mod error;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands::Ctx;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "linf", version, about = "ℓ∞-constrained encoding and hashing toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// JSON experiment config supplying defaults for any command.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Random seed; overrides the config's seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Directory receiving this command's artifacts.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Worker threads for batch stages; 0 runs the sequential
    /// deterministic reference mode.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the box-constrained least-squares problem for every vector in
    /// a dataset.
    Solve(commands::solve::SolveArgs),
    /// Generate a seeded synthetic dataset.
    Synth(commands::synth::SynthArgs),
    /// Learn (or draw) a dictionary from a feature file.
    Dict(commands::dict::DictArgs),
    /// Initialize an encoder from a dictionary and calibration features.
    Init(commands::init::InitArgs),
    /// Train an encoder with the siamese pairwise loss.
    Train(commands::train::TrainArgs),
    /// Encode a dataset into binary codes.
    Encode(commands::encode::EncodeArgs),
    /// Score retrieval quality of query codes against a database.
    Eval(commands::eval::EvalArgs),
    /// Run the quantization error benchmark.
    Quantbench(commands::quantbench::QuantbenchArgs),
    /// Run the full pipeline described by a config file.
    Pipeline(commands::pipeline::PipelineArgs),
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let config = match &cli.config {
        Some(path) => Some(config::ExperimentConfig::load(path)?),
        None => None,
    };
    let ctx = Ctx {
        config,
        seed_flag: cli.seed,
        out: cli.out,
        threads: cli.threads,
    };
    match cli.command {
        Command::Solve(args) => commands::solve::run(&args, &ctx),
        Command::Synth(args) => commands::synth::run(&args, &ctx),
        Command::Dict(args) => commands::dict::run(&args, &ctx),
        Command::Init(args) => commands::init::run(&args, &ctx),
        Command::Train(args) => commands::train::run(&args, &ctx),
        Command::Encode(args) => commands::encode::run(&args, &ctx),
        Command::Eval(args) => commands::eval::run(&args, &ctx),
        Command::Quantbench(args) => commands::quantbench::run(&args, &ctx),
        Command::Pipeline(args) => commands::pipeline::run(&args, &ctx),
    }
}
