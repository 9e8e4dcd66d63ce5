//! Experiment configuration (TOML). Relative paths resolve against the
//! directory of the config file; command-line flags override file values.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use simiscale::regressor::{GridSpec, MlpConfig, Split};
use simiscale::RecordKey;

use crate::error::CliError;

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub paths: Paths,
    #[serde(default)]
    pub analyze: AnalyzeOptions,
    #[serde(default)]
    pub train: TrainOptions,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub validate: ValidateOptions,
}

fn schema_version() -> u32 {
    CONFIG_SCHEMA_VERSION
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    pub registry: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub pi_sets: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub spec: Option<PathBuf>,
    pub reference_data: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeOptions {
    pub target: Option<String>,
    #[serde(default = "default_top_k")]
    pub top_k: usize,
    #[serde(default = "default_max_sets")]
    pub max_sets: usize,
    #[serde(default = "default_max_exponent")]
    pub max_abs_exponent: i64,
    #[serde(default = "default_floor")]
    pub valid_floor: f64,
}

fn default_top_k() -> usize {
    20
}
fn default_max_sets() -> usize {
    512
}
fn default_max_exponent() -> i64 {
    3
}
fn default_floor() -> f64 {
    simiscale::selection::DEFAULT_VALID_FLOOR
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        Self {
            target: None,
            top_k: default_top_k(),
            max_sets: default_max_sets(),
            max_abs_exponent: default_max_exponent(),
            valid_floor: default_floor(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceConfig {
    /// Machine whose rows are candidates for seeded selection.
    pub machine_id: Option<String>,
    /// Explicit reference row.
    pub key: Option<RecordKey>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainOptions {
    /// Position of the set in the pi-set file.
    #[serde(default)]
    pub set_index: usize,
    pub reference: Option<ReferenceConfig>,
    #[serde(default)]
    pub include_raw_pi: bool,
    /// Machines left out of the training pairs.
    #[serde(default)]
    pub exclude_machines: Vec<String>,
    #[serde(default)]
    pub split: Split,
    #[serde(default)]
    pub mlp: MlpConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateOptions {
    /// Only records of these machines are scored; all when empty.
    #[serde(default)]
    pub machines: Vec<String>,
    /// Machine supplying corresponding-state rows for the δ₁ = 1 baseline;
    /// the model's reference row is used when absent.
    pub baseline_machine: Option<String>,
    #[serde(default = "default_error_floor")]
    pub error_floor: f64,
}

fn default_error_floor() -> f64 {
    simiscale::validation::DEFAULT_ERROR_FLOOR
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self {
            machines: Vec::new(),
            baseline_machine: None,
            error_floor: default_error_floor(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| simiscale::Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let mut cfg: ExperimentConfig = toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if cfg.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "{}: schema_version {} is not supported (expected {CONFIG_SCHEMA_VERSION})",
                path.display(),
                cfg.schema_version
            )));
        }
        let base = path.parent().unwrap_or(Path::new("."));
        let p = &mut cfg.paths;
        for slot in [
            &mut p.registry,
            &mut p.data,
            &mut p.pi_sets,
            &mut p.model,
            &mut p.spec,
            &mut p.reference_data,
            &mut p.out,
        ] {
            if let Some(rel) = slot.as_mut() {
                if rel.is_relative() {
                    *rel = base.join(&*rel);
                }
            }
        }
        Ok(cfg)
    }
}
