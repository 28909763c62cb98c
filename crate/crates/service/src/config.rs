use std::path::{Path, PathBuf};

use dialogforge_core::generator::OntologyConfig;
use dialogforge_core::remediator::{BootstrapConfig, RemediationConfig};
use dialogforge_core::runtime::{ErrorInjectionConfig, DEFAULT_CONFIDENCE_THRESHOLD};
use dialogforge_core::simulator::{SimulationConfig, DEFAULT_THRESHOLD};
use dialogforge_core::text::derive_seed;
use serde::{Deserialize, Serialize};

use crate::error::PipelineError;

/// Where intent queries for goals come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuerySource {
    /// Rule-based paraphrases of the training utterances.
    Paraphrases,
    /// The training utterances themselves.
    Training,
    /// Paraphrases read from `paraphrase.ingest_file`.
    Ingest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParaphraseSettings {
    pub source: QuerySource,
    pub max_variants: usize,
    /// Replacement lexicon; the bundled one is used when absent.
    pub lexicon: Option<PathBuf>,
    pub ingest_file: Option<PathBuf>,
}

impl Default for ParaphraseSettings {
    fn default() -> Self {
        Self { source: QuerySource::Paraphrases, max_variants: 10, lexicon: None, ingest_file: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RuntimeSettings {
    pub confidence_threshold: f64,
    pub injection: ErrorInjectionConfig,
}

impl Default for RuntimeSettings {
    fn default() -> Self {
        Self { confidence_threshold: DEFAULT_CONFIDENCE_THRESHOLD, injection: ErrorInjectionConfig::default() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetrainSettings {
    /// Held-out utterances (intent → list). Defaults to the sidecar
    /// `<bot>.eval.json` next to the parsed definition, if present.
    pub eval_utterances: Option<PathBuf>,
    pub eval_per_intent_cap: Option<usize>,
}

/// Every knob of the pipeline. Serialized verbatim into the session store.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub threshold: f64,
    pub max_turns: usize,
    pub parallelism: usize,
    pub paraphrase: ParaphraseSettings,
    pub per_intent_cap: Option<usize>,
    pub ontology: OntologyConfig,
    pub bootstrap_iterations: usize,
    pub bootstrap_level: f64,
    pub move_threshold: f64,
    pub merge_threshold: f64,
    pub max_path_length: Option<usize>,
    pub runtime: RuntimeSettings,
    /// Base URL of a bot speaking the chat protocol; the embedded runtime
    /// is used when absent.
    pub endpoint: Option<String>,
    pub retrain: RetrainSettings,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let rem = RemediationConfig::default();
        Self {
            seed: 0,
            threshold: DEFAULT_THRESHOLD,
            max_turns: 20,
            parallelism: 4,
            paraphrase: ParaphraseSettings::default(),
            per_intent_cap: Some(100),
            ontology: OntologyConfig::default(),
            bootstrap_iterations: rem.bootstrap.iterations,
            bootstrap_level: rem.bootstrap.level,
            move_threshold: rem.move_threshold,
            merge_threshold: rem.merge_threshold,
            max_path_length: None,
            runtime: RuntimeSettings::default(),
            endpoint: None,
            retrain: RetrainSettings::default(),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let bytes = std::fs::read(path).map_err(|e| PipelineError::io(path, e))?;
        let cfg: Self = serde_json::from_slice(&bytes)
            .map_err(|e| PipelineError::InvalidConfig(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::InvalidConfig(m));
        self.simulation().validate().map_err(|e| PipelineError::InvalidConfig(e.to_string()))?;
        if !(0.0..=1.0).contains(&self.runtime.confidence_threshold) {
            return bad(format!("runtime.confidence_threshold {} not in [0, 1]", self.runtime.confidence_threshold));
        }
        if !(self.bootstrap_level > 0.0 && self.bootstrap_level < 1.0) {
            return bad(format!("bootstrap_level {} not in (0, 1)", self.bootstrap_level));
        }
        if !(0.0..=1.0).contains(&self.move_threshold) {
            return bad(format!("move_threshold {} not in [0, 1]", self.move_threshold));
        }
        if self.merge_threshold < 0.0 {
            return bad(format!("merge_threshold {} is negative", self.merge_threshold));
        }
        if self.paraphrase.max_variants == 0 {
            return bad("paraphrase.max_variants must be at least 1".into());
        }
        if self.paraphrase.source == QuerySource::Ingest && self.paraphrase.ingest_file.is_none() {
            return bad("paraphrase.source is ingest but no ingest_file is set".into());
        }
        if self.per_intent_cap == Some(0) {
            return bad("per_intent_cap must be at least 1".into());
        }
        if self.ontology.values_per_entity == 0 || self.ontology.number_min > self.ontology.number_max {
            return bad("ontology settings out of range".into());
        }
        for (slot, p) in &self.runtime.injection.ner_miss_probability {
            if !(0.0..=1.0).contains(p) {
                return bad(format!("ner_miss_probability for {slot} not in [0, 1]"));
            }
        }
        Ok(())
    }

    pub fn stage_seed(&self, stage: &str) -> u64 {
        derive_seed(self.seed, &[stage])
    }

    pub fn simulation(&self) -> SimulationConfig {
        SimulationConfig {
            threshold: self.threshold,
            max_turns: self.max_turns,
            parallelism: self.parallelism,
            seed: self.stage_seed("simulate"),
        }
    }

    pub fn remediation(&self) -> RemediationConfig {
        RemediationConfig {
            bootstrap: BootstrapConfig {
                iterations: self.bootstrap_iterations,
                level: self.bootstrap_level,
                seed: self.stage_seed("bootstrap"),
            },
            move_threshold: self.move_threshold,
            merge_threshold: self.merge_threshold,
            max_path_length: self.max_path_length,
            max_paths: RemediationConfig::default().max_paths,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let c = PipelineConfig::default();
        c.validate().unwrap();
        let back: PipelineConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn partial_documents_fill_defaults() {
        let c: PipelineConfig = serde_json::from_str(r#"{"seed": 9, "runtime": {"confidence_threshold": 0.5}}"#).unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.runtime.confidence_threshold, 0.5);
        assert_eq!(c.max_turns, 20);
    }

    #[test]
    fn out_of_range_rejected() {
        for c in [
            PipelineConfig { threshold: 0.0, ..Default::default() },
            PipelineConfig { parallelism: 0, ..Default::default() },
            PipelineConfig { bootstrap_level: 1.0, ..Default::default() },
            PipelineConfig { per_intent_cap: Some(0), ..Default::default() },
        ] {
            assert!(c.validate().is_err());
        }
        assert!(serde_json::from_str::<PipelineConfig>(r#"{"bogus": 1}"#).is_err());
    }
}
