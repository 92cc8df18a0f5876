//! Resolved run configuration: built-in defaults, then an optional JSON
//! config file, then command-line flags.

use std::path::Path;

use anyhow::{Context, Result};
use emogait::affect::FeatureDefinitionTable;
use emogait::generator::{AugmentConfig, DEFAULT_STEPS};
use emogait::model::ModelConfig;
use emogait::trainer::TrainConfig;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestConfig {
    /// Keep every `stride`-th source frame.
    pub stride: usize,
    /// Frames per emitted gait.
    pub window: usize,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig { stride: 4, window: 60 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateConfig {
    pub steps: usize,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        GenerateConfig { steps: DEFAULT_STEPS }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed. When set it replaces the seeds of every section.
    pub seed: Option<u64>,
    pub ingest: IngestConfig,
    /// Train, validation and test fractions.
    pub split: [f64; 3],
    /// Affective feature table used by `extract`.
    pub features: FeatureDefinitionTable,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub generate: GenerateConfig,
    pub augment: AugmentConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: None,
            ingest: IngestConfig::default(),
            split: [0.8, 0.1, 0.1],
            features: FeatureDefinitionTable::default(),
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            generate: GenerateConfig::default(),
            augment: AugmentConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let cfg = serde_json::from_str(&text)
            .map_err(emogait::Error::from)
            .with_context(|| format!("parsing config {}", path.display()))?;
        Ok(cfg)
    }

    /// Sets the master seed and pushes it into every seeded section.
    pub fn set_seed(&mut self, seed: u64) {
        self.seed = Some(seed);
        self.train.seed = seed;
        self.augment.seed = seed;
    }

    /// Seed for corpus manifests.
    pub fn manifest_seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
