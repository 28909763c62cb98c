use std::path::Path;

use dialogforge_core::generator::GeneratorError;
use dialogforge_core::schema::{LoadError, Violation};
use dialogforge_core::simulator::SimError;
use serde_json::json;
use thiserror::Error;

/// Exit status for malformed or invalid input.
pub const EXIT_INVALID: i32 = 2;
/// Exit status for refusals: existing output, missing or unrevised
/// artifacts from an earlier stage.
pub const EXIT_REFUSED: i32 = 3;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("bot definition failed validation ({} violations)", .0.len())]
    Validation(Vec<Violation>),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("output directory {0} already exists; pass --force to overwrite")]
    OutputExists(String),
    #[error("missing artifact {0}; run the earlier stage first")]
    MissingArtifact(String),
    #[error("dialog-act map for {0:?} has not been revised")]
    UnrevisedMap(String),
    #[error("stage {stage} needs stage {needs} to have completed")]
    StageOrder { stage: String, needs: String },
    #[error("a simulation job is already running for this session")]
    JobRunning,
    #[error("not found: {0}")]
    NotFound(String),
    #[error("version conflict: {0}")]
    Conflict(String),
    #[error(transparent)]
    Generator(GeneratorError),
    #[error(transparent)]
    Simulation(SimError),
    #[error("{0}")]
    Internal(String),
}

impl PipelineError {
    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        PipelineError::Io { path: path.display().to_string(), message: e.to_string() }
    }

    /// Stable machine-readable error code.
    pub fn code(&self) -> &'static str {
        match self {
            PipelineError::Io { .. } => "io_error",
            PipelineError::InvalidInput(_) => "invalid_input",
            PipelineError::Validation(_) => "validation_failed",
            PipelineError::InvalidConfig(_) => "invalid_config",
            PipelineError::OutputExists(_) => "output_exists",
            PipelineError::MissingArtifact(_) => "missing_artifact",
            PipelineError::UnrevisedMap(_) => "unrevised_map",
            PipelineError::StageOrder { .. } => "stage_order",
            PipelineError::JobRunning => "job_running",
            PipelineError::NotFound(_) => "not_found",
            PipelineError::Conflict(_) => "conflict",
            PipelineError::Generator(_) => "generation_failed",
            PipelineError::Simulation(_) => "simulation_failed",
            PipelineError::Internal(_) => "internal",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::InvalidInput(_)
            | PipelineError::Validation(_)
            | PipelineError::InvalidConfig(_)
            | PipelineError::Generator(_) => EXIT_INVALID,
            PipelineError::OutputExists(_)
            | PipelineError::MissingArtifact(_)
            | PipelineError::UnrevisedMap(_)
            | PipelineError::StageOrder { .. }
            | PipelineError::JobRunning
            | PipelineError::Conflict(_) => EXIT_REFUSED,
            _ => 1,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut v = json!({ "error": self.code(), "message": self.to_string() });
        if let PipelineError::Validation(violations) = self {
            v["violations"] = serde_json::to_value(violations).unwrap_or_default();
        }
        v
    }
}

impl From<LoadError> for PipelineError {
    fn from(e: LoadError) -> Self {
        match e {
            LoadError::Validation(v) => PipelineError::Validation(v),
            LoadError::Io(e) => PipelineError::InvalidInput(e.to_string()),
            other => PipelineError::InvalidInput(other.to_string()),
        }
    }
}

impl From<GeneratorError> for PipelineError {
    fn from(e: GeneratorError) -> Self {
        match e {
            GeneratorError::UnrevisedMap(d) => PipelineError::UnrevisedMap(d),
            other => PipelineError::Generator(other),
        }
    }
}

impl From<SimError> for PipelineError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::UnrevisedMap(d) => PipelineError::UnrevisedMap(d),
            other => PipelineError::Simulation(other),
        }
    }
}
