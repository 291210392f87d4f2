//! Shared command context and helpers.

pub mod dict;
pub mod encode;
pub mod eval;
pub mod init;
pub mod pipeline;
pub mod quantbench;
pub mod solve;
pub mod synth;
pub mod train;

use std::path::PathBuf;

use crate::config::ExperimentConfig;
use crate::error::CliError;

/// Resolved global flags shared by every command.
pub struct Ctx {
    pub config: Option<ExperimentConfig>,
    pub seed_flag: Option<u64>,
    pub out: Option<PathBuf>,
    pub threads: usize,
}

impl Ctx {
    /// Flag wins over config; seeds are never derived from entropy.
    pub fn seed(&self) -> Result<u64, CliError> {
        self.seed_flag
            .or(self.config.as_ref().map(|c| c.seed))
            .ok_or_else(|| {
                CliError::Config("a seed is required: pass --seed or a config with one".into())
            })
    }

    pub fn out_dir(&self) -> Result<&PathBuf, CliError> {
        self.out
            .as_ref()
            .ok_or_else(|| CliError::Config("an output directory is required: pass --out".into()))
    }
}

/// Maps `f` over `items`, in parallel when `threads` > 0. Results keep the
/// input order either way, so the output is schedule-independent.
pub fn ordered_map<T, U, F>(items: Vec<T>, threads: usize, f: F) -> Result<Vec<U>, CliError>
where
    T: Send,
    U: Send,
    F: Fn(T) -> Result<U, CliError> + Send + Sync,
{
    if threads == 0 {
        return items.into_iter().map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config(format!("cannot build a {threads}-thread pool: {e}")))?;
    use rayon::prelude::*;
    pool.install(|| items.into_par_iter().map(f).collect())
}

pub fn write_json<T: serde::Serialize>(
    path: &std::path::Path,
    value: &T,
) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    linf_core::io::write_atomic(path, text.as_bytes())?;
    Ok(())
}
