//! The health report: one JSON document per simulation session.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::bootstrap::{bootstrap_ci, BootstrapConfig, Interval};
use super::cluster::{cluster_confusion, IntentCluster, DEFAULT_MERGE_THRESHOLD};
use super::confusion::ConfusionMatrix;
use super::intent_report::{intent_report, IntentReport};
use super::metrics::{aggregate, completion_rate, OutcomeCounts, SessionMetrics};
use super::paths::{enumerate_paths, PathEnumeration, DEFAULT_MAX_PATHS};
use super::root_cause::{backtrack_root_cause, RootCause, RootCauseCategory};
use super::suggest::{
    group_intent_errors, ner_findings, suggest, suggest_dialog_design, ErrorGroup, NerFinding,
    RemediationSuggestion, DEFAULT_MOVE_THRESHOLD,
};
use crate::generator::ConversationGraph;
use crate::simulator::{EpisodeRecord, Outcome};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RemediationConfig {
    pub bootstrap: BootstrapConfig,
    pub move_threshold: f64,
    pub merge_threshold: f64,
    pub max_path_length: Option<usize>,
    pub max_paths: usize,
}

impl Default for RemediationConfig {
    fn default() -> Self {
        Self {
            bootstrap: BootstrapConfig::default(),
            move_threshold: DEFAULT_MOVE_THRESHOLD,
            merge_threshold: DEFAULT_MERGE_THRESHOLD,
            max_path_length: None,
            max_paths: DEFAULT_MAX_PATHS,
        }
    }
}

/// One past or current session in the historical view.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryPoint {
    pub session_id: String,
    pub completion_rate: f64,
    pub macro_f1: f64,
    pub episodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    #[serde(flatten)]
    pub point: HistoryPoint,
    /// Change against the previous row.
    pub delta_completion_rate: Option<f64>,
    pub delta_macro_f1: Option<f64>,
}

pub fn history_rows(points: &[HistoryPoint]) -> Vec<HistoryRow> {
    points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let prev = i.checked_sub(1).map(|j| &points[j]);
            HistoryRow {
                point: p.clone(),
                delta_completion_rate: prev.map(|q| p.completion_rate - q.completion_rate),
                delta_macro_f1: prev.map(|q| p.macro_f1 - q.macro_f1),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub session_id: String,
    pub totals: OutcomeCounts<f64>,
    pub completion_rate: Interval<f64>,
    pub macro_f1: Interval<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedEpisode {
    pub goal_id: String,
    pub outcome: Outcome,
    pub root_cause: RootCause,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DialogSection {
    pub counts: OutcomeCounts<f64>,
    pub root_causes: BTreeMap<RootCauseCategory, usize>,
    pub failures: Vec<FailedEpisode>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntentRemediation {
    pub scores: IntentReport<f64>,
    pub groups: Vec<ErrorGroup>,
    pub suggestions: Vec<RemediationSuggestion>,
    pub dialog_design: Vec<RemediationSuggestion>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analytics {
    pub confusion: ConfusionMatrix,
    pub merge_threshold: f64,
    pub clusters: Vec<IntentCluster<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema_version: u32,
    pub history: Vec<HistoryRow>,
    pub summary: Summary,
    pub dialogs: BTreeMap<String, DialogSection>,
    pub intent_remediation: IntentRemediation,
    pub ner_remediation: Vec<NerFinding>,
    pub analytics: Analytics,
    pub paths: Vec<PathEnumeration>,
}

impl ReportDocument {
    pub fn to_json_pretty(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn history_point(&self) -> HistoryPoint {
        HistoryPoint {
            session_id: self.summary.session_id.clone(),
            completion_rate: self.summary.completion_rate.point,
            macro_f1: self.summary.macro_f1.point,
            episodes: self.summary.totals.episodes,
        }
    }
}

/// Bot structure the report refers to.
pub struct BotInfo<'a> {
    /// Intent names, in matrix order.
    pub intents: Vec<String>,
    /// Entry dialog → intent.
    pub dialog_intents: BTreeMap<String, String>,
    pub graph: Option<&'a ConversationGraph>,
    pub success_dialogs: Vec<String>,
}

/// Parts computed from one session's episodes.
pub struct ReportParts {
    pub session_id: String,
    pub metrics: SessionMetrics<f64>,
    pub completion: Interval<f64>,
    pub intent_report: IntentReport<f64>,
    pub confusion: ConfusionMatrix,
    pub root_causes: Vec<RootCause>,
    pub groups: Vec<ErrorGroup>,
    pub suggestions: Vec<RemediationSuggestion>,
    pub dialog_design: Vec<RemediationSuggestion>,
    pub ner: Vec<NerFinding>,
    pub clusters: Vec<IntentCluster<f64>>,
    pub merge_threshold: f64,
    pub paths: Vec<PathEnumeration>,
    pub outcomes: BTreeMap<String, Outcome>,
}

pub fn render_report(parts: ReportParts, history: &[HistoryPoint]) -> ReportDocument {
    let mut dialogs: BTreeMap<String, DialogSection> = parts
        .metrics
        .dialogs
        .iter()
        .map(|(d, c)| (d.clone(), DialogSection { counts: c.clone(), root_causes: BTreeMap::new(), failures: vec![] }))
        .collect();
    for rc in &parts.root_causes {
        if let Some(sec) = dialogs.get_mut(&rc.dialog) {
            *sec.root_causes.entry(rc.category).or_insert(0) += 1;
            sec.failures.push(FailedEpisode {
                goal_id: rc.goal_id.clone(),
                outcome: parts.outcomes.get(&rc.goal_id).copied().unwrap_or(Outcome::OtherError),
                root_cause: rc.clone(),
            });
        }
    }
    ReportDocument {
        schema_version: REPORT_SCHEMA_VERSION,
        history: history_rows(history),
        summary: Summary {
            session_id: parts.session_id,
            totals: parts.metrics.totals,
            completion_rate: parts.completion,
            macro_f1: parts.intent_report.macro_f1,
        },
        dialogs,
        intent_remediation: IntentRemediation {
            scores: parts.intent_report,
            groups: parts.groups,
            suggestions: parts.suggestions,
            dialog_design: parts.dialog_design,
        },
        ner_remediation: parts.ner,
        analytics: Analytics { confusion: parts.confusion, merge_threshold: parts.merge_threshold, clusters: parts.clusters },
        paths: parts.paths,
    }
}

/// Runs every analysis over one session's episodes.
pub fn analyze(session_id: &str, episodes: &[EpisodeRecord], bot: &BotInfo<'_>, config: &RemediationConfig) -> ReportParts {
    let metrics = aggregate::<f64>(episodes);
    let completion = bootstrap_ci(episodes, completion_rate::<f64>, &config.bootstrap);
    let confusion = ConfusionMatrix::from_episodes(episodes, Some(bot.intents.clone()));
    let report = intent_report::<f64>(episodes, bot.intents.clone(), &config.bootstrap);
    let root_causes: Vec<RootCause> = episodes.iter().filter_map(|e| backtrack_root_cause(e).ok()).collect();
    let groups = group_intent_errors(episodes);
    let suggestions = suggest(&groups, &confusion, config.move_threshold);
    let dialog_design = suggest_dialog_design(&root_causes, &bot.dialog_intents);
    let ner = ner_findings(&root_causes);
    let clusters = cluster_confusion(&confusion, config.merge_threshold);
    let mut paths = Vec::new();
    if let Some(graph) = bot.graph {
        for dialog in bot.dialog_intents.keys() {
            for target in &bot.success_dialogs {
                if let Ok(p) = enumerate_paths(graph, dialog, target, config.max_path_length, config.max_paths) {
                    paths.push(p);
                }
            }
        }
    }
    ReportParts {
        session_id: session_id.to_owned(),
        metrics,
        completion,
        intent_report: report,
        confusion,
        root_causes,
        groups,
        suggestions,
        dialog_design,
        ner,
        clusters,
        merge_threshold: config.merge_threshold,
        paths,
        outcomes: episodes.iter().map(|e| (e.goal_id.clone(), e.outcome)).collect(),
    }
}

/// Analysis plus rendering; the current session is appended to `history`.
pub fn remediate(
    session_id: &str,
    episodes: &[EpisodeRecord],
    bot: &BotInfo<'_>,
    history: &[HistoryPoint],
    config: &RemediationConfig,
) -> ReportDocument {
    let parts = analyze(session_id, episodes, bot, config);
    let current = HistoryPoint {
        session_id: session_id.to_owned(),
        completion_rate: parts.completion.point,
        macro_f1: parts.intent_report.macro_f1.point,
        episodes: parts.metrics.totals.episodes,
    };
    let mut all = history.to_vec();
    all.push(current);
    render_report(parts, &all)
}
