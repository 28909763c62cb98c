//! Turns simulated episodes into health metrics, root causes and
//! remediation suggestions.

pub mod bootstrap;
pub mod cluster;
pub mod confusion;
pub mod intent_report;
pub mod metrics;
pub mod paths;
pub mod report;
pub mod root_cause;
pub mod suggest;

use thiserror::Error;

pub use bootstrap::{bootstrap_ci, bootstrap_many, BootstrapConfig, Interval};
pub use cluster::{cluster_confusion, IntentCluster, DEFAULT_MERGE_THRESHOLD};
pub use confusion::{f1_of, intent_scores, macro_f1, ConfusionMatrix, IntentScore, FALLBACK};
pub use intent_report::{intent_report, IntentReport, IntentScoreCi};
pub use metrics::{aggregate, completion_rate, OutcomeCounts, SessionMetrics};
pub use paths::{enumerate_paths, DialogPath, PathEnumeration, DEFAULT_MAX_PATHS};
pub use report::{
    analyze, history_rows, remediate, render_report, BotInfo, HistoryPoint, RemediationConfig, ReportDocument,
    REPORT_SCHEMA_VERSION,
};
pub use root_cause::{backtrack_root_cause, RootCause, RootCauseCategory};
pub use suggest::{
    group_intent_errors, is_misclassified, ner_findings, suggest, suggest_dialog_design, ErrorGroup, NerFinding,
    RemediationSuggestion, SuggestionKind,
};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum RemediationError {
    #[error("episode {0} did not end in an error")]
    NotAnError(String),
    #[error("unknown dialog {0:?}")]
    UnknownVertex(String),
}
