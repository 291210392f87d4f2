//! End-to-end pipeline: data → dictionary → initialization → training →
//! encoding → evaluation, with a manifest tying the artifacts to the
//! config hash and seed.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use nalgebra::DMatrix;
use serde::Serialize;

use linf_core::dictionary::{ksvd_learn, Dictionary, KsvdConfig};
use linf_core::encoder::{encode_batch, init_from_dictionary, lambda0_from_calibration};
use linf_core::hashing::{binarize, evaluate, RetrievalReport};
use linf_core::io;
use linf_core::synth;
use linf_core::training::{train_siamese, PairSource};

use super::{ordered_map, write_json, Ctx};
use crate::config::{DictKind, ExperimentConfig};
use crate::error::CliError;

/// Entries at or above this fraction of λᵢ count as saturated in the
/// manifest's antipodality statistic.
const SATURATION_RATIO: f64 = 0.9;

#[derive(Debug, Args)]
pub struct PipelineArgs {}

#[derive(Debug, Serialize)]
struct Manifest {
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    failed_stage: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    config_sha256: String,
    seed: u64,
    epochs: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda0: Option<f64>,
    saturation_ratio: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    saturation_fraction: Option<f64>,
    artifacts: BTreeMap<&'static str, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    report: Option<RetrievalReport>,
}

/// Exclusive ownership of an artifacts directory for the run's duration.
struct DirLock {
    path: PathBuf,
}

impl DirLock {
    fn acquire(directory: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(directory)
            .map_err(|e| CliError::Io(format!("cannot create {}: {e}", directory.display())))?;
        let path = directory.join(".lock");
        match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(Self { path }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(CliError::Io(format!(
                "artifacts directory {} is locked by another run (remove {} if stale)",
                directory.display(),
                path.display()
            ))),
            Err(e) => Err(CliError::Io(format!(
                "cannot create lock {}: {e}",
                path.display()
            ))),
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

struct LoadedData {
    train: DMatrix<f64>,
    train_labels: Vec<i64>,
    query: DMatrix<f64>,
    query_labels: Vec<i64>,
    database: DMatrix<f64>,
    database_labels: Vec<i64>,
}

fn stage<T>(
    name: &'static str,
    run: impl FnOnce() -> Result<T, CliError>,
) -> Result<T, (&'static str, CliError)> {
    run().map_err(|e| (name, e))
}

pub fn run(_args: &PipelineArgs, ctx: &Ctx) -> Result<(), CliError> {
    let out = ctx.out_dir()?.clone();
    let config = ctx
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("the pipeline needs --config".into()))?
        .clone();
    let seed = ctx.seed()?;
    let _lock = DirLock::acquire(&out)?;

    let mut manifest = Manifest {
        status: "failed",
        failed_stage: None,
        error: None,
        config_sha256: config.sha256(),
        seed,
        epochs: config.training.epochs,
        lambda0: None,
        saturation_ratio: SATURATION_RATIO,
        saturation_fraction: None,
        artifacts: BTreeMap::new(),
        report: None,
    };

    match run_stages(&config, seed, &out, ctx.threads, &mut manifest) {
        Ok(()) => {
            manifest.status = "ok";
            write_json(&out.join("manifest.json"), &manifest)?;
            Ok(())
        }
        Err((stage_name, error)) => {
            manifest.failed_stage = Some(stage_name);
            manifest.error = Some(error.to_string());
            write_json(&out.join("manifest.json"), &manifest)?;
            Err(CliError::Config(format!(
                "pipeline stage `{stage_name}` failed: {error}"
            )))
        }
    }
}

fn run_stages(
    config: &ExperimentConfig,
    seed: u64,
    out: &Path,
    threads: usize,
    manifest: &mut Manifest,
) -> Result<(), (&'static str, CliError)> {
    let data = stage("data", || load_data(config, seed, out, manifest))?;

    let dictionary = stage("dictionary", || {
        let dictionary = match config.dictionary.kind {
            DictKind::Ksvd => {
                let mut train = data.train.clone();
                if config.dictionary.mean_removal {
                    for i in 0..train.nrows() {
                        let mean = train.row(i).sum() / train.ncols() as f64;
                        for m in 0..train.ncols() {
                            train[(i, m)] -= mean;
                        }
                    }
                }
                ksvd_learn(
                    &train,
                    &KsvdConfig {
                        atoms: config.dictionary.atoms,
                        sparsity: config.dictionary.sparsity(),
                        iterations: config.dictionary.iterations,
                        seed,
                    },
                )?
                .dictionary
            }
            DictKind::Random => {
                Dictionary::random(data.train.nrows(), config.dictionary.atoms, seed)?
            }
        };
        io::write_vectors(&out.join("dictionary.bin"), dictionary.matrix())?;
        manifest.artifacts.insert("dictionary", "dictionary.bin".into());
        Ok(dictionary)
    })?;

    let initialized = stage("init", || {
        let lambda0 = match config.encoder.lambda0 {
            Some(value) => value,
            None => {
                lambda0_from_calibration(&dictionary, &data.train, config.encoder.lambda_scale)?
            }
        };
        manifest.lambda0 = Some(lambda0);
        let initialized = init_from_dictionary(
            &dictionary,
            config.solver.beta,
            lambda0,
            config.encoder.stages,
            &data.train,
        )?;
        io::write_model(&out.join("model_init.bin"), &initialized.params)?;
        manifest.artifacts.insert("model_init", "model_init.bin".into());
        Ok(initialized)
    })?;

    let trained = stage("train", || {
        let train_config = config.training.to_core(seed);
        let (trained, history) = train_siamese(
            &data.train,
            &PairSource::Labels(data.train_labels.clone()),
            &train_config,
            initialized.params.clone(),
        )?;
        io::write_model(&out.join("model.bin"), &trained)?;
        io::write_loss_history(&out.join("loss_history.csv"), &history)?;
        manifest.artifacts.insert("model", "model.bin".into());
        manifest.artifacts.insert("loss_history", "loss_history.csv".into());
        Ok(trained)
    })?;

    let (query_codes, database_codes) = stage("encode", || {
        let encode_set = |signals: &DMatrix<f64>| -> Result<DMatrix<f64>, CliError> {
            if threads == 0 {
                return Ok(encode_batch(&trained, signals)?);
            }
            let columns: Vec<usize> = (0..signals.ncols()).collect();
            let encoded = ordered_map(columns, threads, |m| {
                let single = signals.column(m).clone_owned();
                Ok(encode_batch(&trained, &DMatrix::from_columns(&[single]))?)
            })?;
            let mut output = DMatrix::zeros(trained.code_dim(), signals.ncols());
            for (m, column) in encoded.iter().enumerate() {
                output.set_column(m, &column.column(0));
            }
            Ok(output)
        };
        let query_reps = encode_set(&data.query)?;
        let database_reps = encode_set(&data.database)?;

        let lambda = trained.lambda();
        let mut saturated = 0usize;
        let mut entries = 0usize;
        for reps in [&query_reps, &database_reps] {
            for m in 0..reps.ncols() {
                for i in 0..reps.nrows() {
                    entries += 1;
                    if reps[(i, m)].abs() >= SATURATION_RATIO * lambda[i] {
                        saturated += 1;
                    }
                }
            }
        }
        manifest.saturation_fraction = Some(saturated as f64 / entries.max(1) as f64);

        let query_codes: Vec<_> = (0..query_reps.ncols())
            .map(|m| binarize(&query_reps.column(m).clone_owned()))
            .collect();
        let database_codes: Vec<_> = (0..database_reps.ncols())
            .map(|m| binarize(&database_reps.column(m).clone_owned()))
            .collect();
        io::write_codes(&out.join("query_codes.hex"), &query_codes)?;
        io::write_codes(&out.join("database_codes.hex"), &database_codes)?;
        manifest.artifacts.insert("query_codes", "query_codes.hex".into());
        manifest
            .artifacts
            .insert("database_codes", "database_codes.hex".into());
        Ok((query_codes, database_codes))
    })?;

    stage("eval", || {
        let report = evaluate(
            &query_codes,
            &data.query_labels,
            &database_codes,
            &data.database_labels,
            config.evaluation.radius,
            config.evaluation.top_k,
        )?;
        write_json(&out.join("report.json"), &report)?;
        io::write_atomic(
            &out.join("report.csv"),
            super::eval::report_csv(&report).as_bytes(),
        )?;
        manifest.artifacts.insert("report", "report.json".into());
        manifest.report = Some(report);
        Ok(())
    })?;

    Ok(())
}

fn load_data(
    config: &ExperimentConfig,
    seed: u64,
    out: &Path,
    manifest: &mut Manifest,
) -> Result<LoadedData, CliError> {
    let data = if let Some(spec) = &config.data.synth_clusters {
        let cluster_spec = synth::ClustersSpec {
            dim: spec.dim,
            classes: spec.classes,
            separation: spec.separation,
        };
        // One draw shares the class centers across the three splits; the
        // splits are then disjoint column ranges.
        let total = spec.train + spec.query + spec.database;
        let (all, labels) = synth::clusters(&cluster_spec, total, seed)?;
        let take = |from: usize, count: usize| {
            (
                all.columns(from, count).clone_owned(),
                labels[from..from + count].to_vec(),
            )
        };
        let (train, train_labels) = take(0, spec.train);
        let (query, query_labels) = take(spec.train, spec.query);
        let (database, database_labels) = take(spec.train + spec.query, spec.database);
        LoadedData {
            train,
            train_labels,
            query,
            query_labels,
            database,
            database_labels,
        }
    } else {
        let files = config
            .data
            .files
            .as_ref()
            .expect("config validation guarantees one data source");
        let train = io::read_vectors(&files.train)?;
        let train_labels = io::read_labels(&files.train_labels, train.ncols())?;
        let query = io::read_vectors(&files.query)?;
        let query_labels = io::read_labels(&files.query_labels, query.ncols())?;
        let database = io::read_vectors(&files.database)?;
        let database_labels = io::read_labels(&files.database_labels, database.ncols())?;
        LoadedData {
            train,
            train_labels,
            query,
            query_labels,
            database,
            database_labels,
        }
    };

    io::write_vectors(&out.join("train_features.bin"), &data.train)?;
    io::write_labels(&out.join("train_labels.csv"), &data.train_labels)?;
    io::write_vectors(&out.join("query_features.bin"), &data.query)?;
    io::write_labels(&out.join("query_labels.csv"), &data.query_labels)?;
    io::write_vectors(&out.join("database_features.bin"), &data.database)?;
    io::write_labels(&out.join("database_labels.csv"), &data.database_labels)?;
    for (key, file) in [
        ("train_features", "train_features.bin"),
        ("train_labels", "train_labels.csv"),
        ("query_features", "query_features.bin"),
        ("query_labels", "query_labels.csv"),
        ("database_features", "database_features.bin"),
        ("database_labels", "database_labels.csv"),
    ] {
        manifest.artifacts.insert(key, file.into());
    }
    Ok(data)
}
