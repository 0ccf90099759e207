//! Experiment specifications: JSON files or flags, patched with `key=value` overrides.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentName {
    #[value(name = "critical_n")]
    CriticalN,
    #[value(name = "discrimination")]
    Discrimination,
    #[value(name = "recovery")]
    Recovery,
    #[value(name = "ridge")]
    Ridge,
    #[value(name = "aicc_variant")]
    AiccVariant,
    #[value(name = "cohort_pipeline")]
    CohortPipeline,
}

impl ExperimentName {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentName::CriticalN => "critical_n",
            ExperimentName::Discrimination => "discrimination",
            ExperimentName::Recovery => "recovery",
            ExperimentName::Ridge => "ridge",
            ExperimentName::AiccVariant => "aicc_variant",
            ExperimentName::CohortPipeline => "cohort_pipeline",
        }
    }

    pub fn default_trials(&self) -> usize {
        match self {
            ExperimentName::CriticalN | ExperimentName::AiccVariant => 50,
            ExperimentName::Recovery => 30,
            ExperimentName::Discrimination
            | ExperimentName::Ridge
            | ExperimentName::CohortPipeline => 1,
        }
    }
}

impl std::fmt::Display for ExperimentName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

pub const DEFAULT_SEED: u64 = 20_240_601;

fn default_seed() -> u64 {
    DEFAULT_SEED
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub experiment: ExperimentName,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Repetitions; each experiment has its own default.
    #[serde(default)]
    pub trials: Option<usize>,
    /// Output directory.
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Experiment parameter overrides, keyed by parameter name.
    #[serde(default)]
    pub overrides: Map<String, Value>,
}

impl ExperimentSpec {
    pub fn new(experiment: ExperimentName) -> Self {
        Self {
            experiment,
            seed: DEFAULT_SEED,
            trials: None,
            output: None,
            overrides: Map::new(),
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| HarnessError::Usage(format!("experiment config: {e}")))
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Usage(format!("reading config {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn trials(&self) -> usize {
        self.trials
            .unwrap_or_else(|| self.experiment.default_trials())
    }

    /// Applies `key=value`; the value is read as JSON when it parses, else as a string.
    pub fn apply_set(&mut self, assignment: &str) -> Result<()> {
        let (key, raw) = assignment.split_once('=').ok_or_else(|| {
            HarnessError::Usage(format!("override '{assignment}' is not key=value"))
        })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(HarnessError::Usage(format!(
                "override '{assignment}' has an empty key"
            )));
        }
        let value = serde_json::from_str(raw.trim())
            .unwrap_or_else(|_| Value::String(raw.trim().to_string()));
        match key {
            "seed" => {
                self.seed = value.as_u64().ok_or_else(|| {
                    HarnessError::Usage(format!("seed must be a non-negative integer, got {raw}"))
                })?
            }
            "trials" => {
                self.trials = Some(value.as_u64().filter(|&t| t > 0).ok_or_else(|| {
                    HarnessError::Usage(format!("trials must be a positive integer, got {raw}"))
                })? as usize)
            }
            _ => {
                self.overrides.insert(key.to_string(), value);
            }
        }
        Ok(())
    }

    /// Experiment parameters: defaults of `P` overlaid with the overrides.
    /// Unknown keys and ill-typed values are usage errors.
    pub fn params<P: Default + Serialize + DeserializeOwned>(&self) -> Result<P> {
        let mut merged = match serde_json::to_value(P::default())? {
            Value::Object(m) => m,
            _ => unreachable!("experiment parameters serialize to an object"),
        };
        for (k, v) in &self.overrides {
            if !merged.contains_key(k) {
                let known: Vec<&String> = merged.keys().collect();
                return Err(HarnessError::Usage(format!(
                    "unknown parameter '{k}' for {}; known: {known:?}",
                    self.experiment
                )));
            }
            merged.insert(k.clone(), v.clone());
        }
        serde_json::from_value(Value::Object(merged)).map_err(|e| {
            HarnessError::Usage(format!("invalid parameters for {}: {e}", self.experiment))
        })
    }
}
