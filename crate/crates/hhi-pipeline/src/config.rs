//! The declarative pipeline configuration: one TOML file with per-stage
//! sections. CLI flags override file values; `HHI_*` environment variables
//! override the globals.

use std::path::Path;

use hhi_core::bench::BenchConfig;
use hhi_core::captioner::CaptionerTrainConfig;
use hhi_core::distill::TrainConfig;
use hhi_core::extract::{ExtractionRuleConfig, HarvestConfig};
use hhi_core::synth::GenerationParams;
use serde::{Deserialize, Serialize};

use crate::error::{PipelineError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Global seed; recorded in every manifest and feeding every stage RNG.
    pub seed: u64,
    /// Bounded worker pool size for parallel-map stages.
    pub workers: usize,
    pub harvest: HarvestConfig,
    pub extract: ExtractionRuleConfig,
    pub gen_interactions: GenStageConfig,
    pub gen_pairs: GenStageConfig,
    pub distill: TrainConfig,
    pub bench: BenchConfig,
    pub captioner: CaptionerTrainConfig,
    pub metrics: MetricsConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            workers: 1,
            harvest: HarvestConfig::default(),
            extract: ExtractionRuleConfig::default(),
            gen_interactions: GenStageConfig {
                budget: 100,
                params: GenerationParams::default(),
            },
            gen_pairs: GenStageConfig {
                budget: 100,
                params: GenerationParams::for_pair_generation(0),
            },
            distill: TrainConfig::default(),
            bench: BenchConfig::default(),
            captioner: CaptionerTrainConfig::default(),
            metrics: MetricsConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenStageConfig {
    pub budget: usize,
    pub params: GenerationParams,
}

impl Default for GenStageConfig {
    fn default() -> Self {
        Self { budget: 100, params: GenerationParams::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricsConfig {
    pub k_list: Vec<usize>,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self { k_list: vec![1, 5, 8] }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        let mut config: PipelineConfig = toml::from_str(&text).map_err(|e| {
            PipelineError::validation(format!("{}: {e}", path.display()))
        })?;
        config.validate()?;
        config.apply_env();
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.harvest
            .validate()
            .map_err(|e| PipelineError::validation(e.to_string()))?;
        self.gen_interactions
            .params
            .validate()
            .map_err(|e| PipelineError::validation(e.to_string()))?;
        self.gen_pairs
            .params
            .validate()
            .map_err(|e| PipelineError::validation(e.to_string()))?;
        if self.workers == 0 {
            return Err(PipelineError::validation("workers must be at least 1"));
        }
        Ok(())
    }

    /// `HHI_SEED` and `HHI_WORKERS` override the file values.
    pub fn apply_env(&mut self) {
        if let Some(seed) = env_parse("HHI_SEED") {
            self.seed = seed;
        }
        if let Some(workers) = env_parse("HHI_WORKERS") {
            self.workers = workers;
        }
    }

    /// Hash of the effective configuration, for manifests.
    pub fn hash(&self) -> String {
        let serialized = serde_json::to_string(self).expect("config serializes");
        crate::manifest::sha256_str(&serialized)
    }
}

fn env_parse<T: std::str::FromStr>(key: &str) -> Option<T> {
    std::env::var(key).ok().and_then(|v| v.parse().ok())
}
