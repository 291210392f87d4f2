//! Experiment configuration: one JSON document covering every stage.
//!
//! Built-in defaults carry the standard hyperparameters (β = 0.6, margin 5,
//! learning rate 0.01, batch 128, two stages); a config file overrides the
//! built-ins and command-line flags override the config. Unknown keys are
//! rejected, and the seed is mandatory so runs never depend on ambient
//! entropy.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub data: DataConfig,
    pub dictionary: DictionaryConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub encoder: EncoderConfig,
    #[serde(default)]
    pub training: TrainingConfig,
    #[serde(default)]
    pub evaluation: EvaluationConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synth_clusters: Option<SynthClustersConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub files: Option<DataFilesConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthClustersConfig {
    pub dim: usize,
    pub classes: usize,
    pub separation: f64,
    pub train: usize,
    pub query: usize,
    pub database: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataFilesConfig {
    pub train: PathBuf,
    pub train_labels: PathBuf,
    pub query: PathBuf,
    pub query_labels: PathBuf,
    pub database: PathBuf,
    pub database_labels: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DictKind {
    Ksvd,
    Random,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DictionaryConfig {
    pub atoms: usize,
    /// Defaults to max(1, atoms/8).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sparsity: Option<usize>,
    #[serde(default = "default_dict_iterations")]
    pub iterations: usize,
    #[serde(default = "default_dict_kind")]
    pub kind: DictKind,
    /// Subtract the per-feature mean of the training set before learning
    /// the dictionary (off by default; the dictionary then applies to raw
    /// features).
    #[serde(default)]
    pub mean_removal: bool,
}

fn default_dict_iterations() -> usize {
    30
}

fn default_dict_kind() -> DictKind {
    DictKind::Ksvd
}

impl DictionaryConfig {
    pub fn sparsity(&self) -> usize {
        self.sparsity.unwrap_or((self.atoms / 8).max(1))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub beta: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Box bound for the standalone `solve` command; the pipeline derives
    /// its bound from the encoder section instead.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            beta: linf_core::solver::DEFAULT_PENALTY,
            tol: linf_core::solver::DEFAULT_TOLERANCE,
            max_iter: 2000,
            lambda: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EncoderConfig {
    pub stages: usize,
    /// Scale applied to the median least-squares sup-norm when deriving λ₀.
    pub lambda_scale: f64,
    /// Explicit λ₀; wins over the scale rule when set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda0: Option<f64>,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            stages: 2,
            lambda_scale: 0.8,
            lambda0: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub momentum: f64,
    pub margin: f64,
    pub epochs: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            batch_size: 128,
            momentum: 0.0,
            margin: 5.0,
            epochs: 50,
        }
    }
}

impl TrainingConfig {
    pub fn to_core(&self, seed: u64) -> linf_core::TrainConfig {
        linf_core::TrainConfig {
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            momentum: self.momentum,
            margin: self.margin,
            epochs: self.epochs,
            seed,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluationConfig {
    pub radius: usize,
    pub top_k: usize,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self {
            radius: 2,
            top_k: 10,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
        let config: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        match (&self.data.synth_clusters, &self.data.files) {
            (Some(_), Some(_)) => Err(CliError::Config(
                "config data section must set exactly one of synth_clusters and files".into(),
            )),
            (None, None) => Err(CliError::Config(
                "config data section is empty: set synth_clusters or files".into(),
            )),
            _ => Ok(()),
        }
    }

    /// Hash of the canonical serialized form, for the run manifest.
    pub fn sha256(&self) -> String {
        use sha2::{Digest, Sha256};
        let canonical = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&canonical);
        let mut hash = String::with_capacity(64);
        for byte in digest {
            hash.push_str(&format!("{byte:02x}"));
        }
        hash
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_json() -> serde_json::Value {
        serde_json::json!({
            "seed": 7,
            "data": { "synth_clusters": {
                "dim": 8, "classes": 2, "separation": 6.0,
                "train": 40, "query": 10, "database": 40
            }},
            "dictionary": { "atoms": 4 }
        })
    }

    #[test]
    fn defaults_fill_optional_sections() {
        let config: ExperimentConfig = serde_json::from_value(minimal_json()).unwrap();
        assert_eq!(config.solver.beta, 0.6);
        assert_eq!(config.training.batch_size, 128);
        assert_eq!(config.training.margin, 5.0);
        assert_eq!(config.training.learning_rate, 0.01);
        assert_eq!(config.encoder.stages, 2);
        assert_eq!(config.evaluation.radius, 2);
        assert_eq!(config.dictionary.sparsity(), 1);
    }

    #[test]
    fn unknown_keys_rejected() {
        let mut json = minimal_json();
        json["mystery"] = serde_json::json!(1);
        assert!(serde_json::from_value::<ExperimentConfig>(json).is_err());

        let mut nested = minimal_json();
        nested["training"] = serde_json::json!({ "learning_rte": 0.1 });
        assert!(serde_json::from_value::<ExperimentConfig>(nested).is_err());
    }

    #[test]
    fn seed_is_mandatory() {
        let mut json = minimal_json();
        json.as_object_mut().unwrap().remove("seed");
        assert!(serde_json::from_value::<ExperimentConfig>(json).is_err());
    }

    #[test]
    fn hash_is_stable_under_formatting() {
        let a: ExperimentConfig = serde_json::from_value(minimal_json()).unwrap();
        let pretty = serde_json::to_string_pretty(&minimal_json()).unwrap();
        let b: ExperimentConfig = serde_json::from_str(&pretty).unwrap();
        assert_eq!(a.sha256(), b.sha256());
    }
}
