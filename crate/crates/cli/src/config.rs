use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tlcompose::compose::Stage;
use tlcompose::env::EnvConfig;
use tlcompose::logic::Formula;
use tlcompose::{json_hash, parse_formula_with, TrainConfig};

use crate::error::{Failure, ResultExt};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationSpec {
    #[serde(default = "default_episodes")]
    pub episodes: usize,
    /// Update steps between training checkpoints.
    #[serde(default = "default_every")]
    pub every: usize,
}

fn default_episodes() -> usize {
    50
}

fn default_every() -> usize {
    200
}

impl Default for EvaluationSpec {
    fn default() -> Self {
        EvaluationSpec {
            episodes: default_episodes(),
            every: default_every(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompositionSpec {
    #[serde(default = "default_stage")]
    pub stage: Stage,
    /// Off-policy updates for each of the learning stages.
    #[serde(default = "default_updates")]
    pub updates: usize,
}

fn default_stage() -> Stage {
    Stage::C1
}

fn default_updates() -> usize {
    50_000
}

impl Default for CompositionSpec {
    fn default() -> Self {
        CompositionSpec {
            stage: default_stage(),
            updates: default_updates(),
        }
    }
}

/// One experiment, as read from a JSON file. Command-line flags override
/// individual fields before the configuration hash is taken.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub environment: EnvConfig,
    #[serde(default)]
    pub formula: Option<String>,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub evaluation: EvaluationSpec,
    #[serde(default)]
    pub composition: CompositionSpec,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            environment: EnvConfig::default(),
            formula: None,
            train: TrainConfig::default(),
            evaluation: EvaluationSpec::default(),
            composition: CompositionSpec::default(),
            output_dir: default_output(),
            seed: None,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, Failure> {
        let Some(path) = path else {
            return Ok(ExperimentConfig::default());
        };
        let text = fs::read_to_string(path).config_err(|| format!("cannot read config {}", path.display()))?;
        serde_json::from_str(&text).config_err(|| format!("invalid config {}", path.display()))
    }

    pub fn validate(&self) -> Result<(), Failure> {
        self.environment.validate().config_err(|| "invalid environment".to_string())?;
        self.train.validate().config_err(|| "invalid training settings".to_string())?;
        self.environment
            .parsed_macros()
            .config_err(|| "invalid macro binding".to_string())?;
        Ok(())
    }

    /// Hash of everything that defines the experiment; where the outputs
    /// go does not.
    pub fn hash(&self) -> String {
        let mut defining = self.clone();
        defining.output_dir = PathBuf::new();
        json_hash(&defining)
    }

    pub fn parse(&self, text: &str) -> Result<Formula, Failure> {
        let macros = self
            .environment
            .parsed_macros()
            .config_err(|| "invalid macro binding".to_string())?;
        parse_formula_with(text, &self.environment.features(), &macros)
            .config_err(|| format!("cannot parse formula `{text}`"))
    }

    pub fn formula_text(&self) -> Result<&str, Failure> {
        self.formula
            .as_deref()
            .ok_or_else(|| Failure::config("no formula given (set `formula` in the config or pass --formula)"))
    }
}

/// Envelope written around every JSON artifact.
#[derive(Debug, Serialize, Deserialize)]
pub struct Artifact<T> {
    pub formula: String,
    pub config_hash: String,
    #[serde(flatten)]
    pub body: T,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).expect("artifact serializes");
    text.push('\n');
    write_text(path, &text)
}

pub fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).config_err(|| format!("cannot create {}", dir.display()))?;
    }
    fs::write(path, text).config_err(|| format!("cannot write {}", path.display()))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path).config_err(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).config_err(|| format!("malformed artifact {}", path.display()))
}
