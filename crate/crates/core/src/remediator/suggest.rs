use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::confusion::{ConfusionMatrix, FALLBACK};
use super::root_cause::{RootCause, RootCauseCategory};
use crate::simulator::{EpisodeRecord, Outcome};

pub const DEFAULT_MOVE_THRESHOLD: f64 = 0.5;

/// One misclassified query.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Misclassification {
    pub goal_id: String,
    pub query: String,
    /// Predicted intent, or `fallback` when none was recognized.
    pub predicted: String,
}

/// Intent errors (and unrecognized queries) sharing one origin utterance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorGroup {
    pub intent: String,
    pub origin_utterance: String,
    pub errors: Vec<Misclassification>,
}

impl ErrorGroup {
    pub fn predicted_counts(&self) -> BTreeMap<String, usize> {
        let mut c = BTreeMap::new();
        for m in &self.errors {
            *c.entry(m.predicted.clone()).or_insert(0) += 1;
        }
        c
    }
}

/// The query was not routed to its own intent.
pub fn is_misclassified(e: &EpisodeRecord) -> bool {
    match e.outcome {
        Outcome::IntentError => true,
        Outcome::OtherError => e.predicted_intent.is_none(),
        _ => false,
    }
}

pub fn group_intent_errors(episodes: &[EpisodeRecord]) -> Vec<ErrorGroup> {
    let mut groups: BTreeMap<(String, String), Vec<Misclassification>> = BTreeMap::new();
    for e in episodes.iter().filter(|e| is_misclassified(e)) {
        let origin = e.goal.origin_utterance.clone().unwrap_or_else(|| e.goal.intent_query.clone());
        groups.entry((e.goal.intent.clone(), origin)).or_default().push(Misclassification {
            goal_id: e.goal_id.clone(),
            query: e.goal.intent_query.clone(),
            predicted: e.predicted_intent.clone().unwrap_or_else(|| FALLBACK.to_owned()),
        });
    }
    let mut out: Vec<ErrorGroup> = groups
        .into_iter()
        .map(|((intent, origin_utterance), errors)| ErrorGroup { intent, origin_utterance, errors })
        .collect();
    // stable: equal counts keep the (intent, origin) order of the map
    out.sort_by_key(|g| std::cmp::Reverse(g.errors.len()));
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuggestionKind {
    AugmentTrainingSet,
    MoveUtterance,
    ReviewDialogDesign,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Evidence {
    pub queries: Vec<String>,
    pub episode_ids: Vec<String>,
    /// Predicted label → count among the group's errors.
    pub predicted_counts: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RemediationSuggestion {
    pub kind: SuggestionKind,
    pub intent: String,
    pub origin_utterance: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_intent: Option<String>,
    pub evidence: Evidence,
    pub rationale: String,
}

/// One suggestion per group, in group order.
pub fn suggest(groups: &[ErrorGroup], confusion: &ConfusionMatrix, move_threshold: f64) -> Vec<RemediationSuggestion> {
    groups
        .iter()
        .map(|g| {
            let counts = g.predicted_counts();
            let total = g.errors.len();
            let evidence = Evidence {
                queries: g.errors.iter().map(|m| m.query.clone()).collect(),
                episode_ids: g.errors.iter().map(|m| m.goal_id.clone()).collect(),
                predicted_counts: counts.clone(),
            };
            // largest count, ties to the smaller label
            let (top, top_n) = counts
                .iter()
                .fold((String::new(), 0usize), |acc, (k, &v)| if v > acc.1 { (k.clone(), v) } else { acc });
            let share = top_n as f64 / total.max(1) as f64;
            let overall = |label: &str| -> usize {
                match (confusion.index(&g.intent), label) {
                    (Some(i), FALLBACK) => confusion.counts[i][confusion.fallback_column()],
                    (Some(i), l) => confusion.index(l).map_or(0, |j| confusion.counts[i][j]),
                    (None, _) => 0,
                }
            };
            let (kind, target_intent, rationale) = if top != FALLBACK && share > move_threshold {
                (
                    SuggestionKind::MoveUtterance,
                    Some(top.clone()),
                    format!(
                        "{top_n} of {total} paraphrases of {:?} were classified as {top} ({} {}→{top} confusions overall); \
                         the utterance may belong to {top}",
                        g.origin_utterance,
                        overall(&top),
                        g.intent
                    ),
                )
            } else if top == FALLBACK {
                (
                    SuggestionKind::AugmentTrainingSet,
                    None,
                    format!(
                        "{top_n} of {total} paraphrases of {:?} were not recognized as any intent; \
                         add them to the {} training set",
                        g.origin_utterance, g.intent
                    ),
                )
            } else {
                let spread = counts.iter().map(|(k, v)| format!("{k}: {v}")).collect::<Vec<_>>().join(", ");
                (
                    SuggestionKind::AugmentTrainingSet,
                    None,
                    format!(
                        "paraphrases of {:?} were confused with several intents ({spread}); \
                         add them to the {} training set",
                        g.origin_utterance, g.intent
                    ),
                )
            };
            RemediationSuggestion {
                kind,
                intent: g.intent.clone(),
                origin_utterance: g.origin_utterance.clone(),
                target_intent,
                evidence,
                rationale,
            }
        })
        .collect()
}

/// Dialog-design suggestions: one per (dialog, bot message) among unmapped
/// messages and dialog-flow failures, most frequent first.
pub fn suggest_dialog_design(causes: &[RootCause], intent_of_dialog: &BTreeMap<String, String>) -> Vec<RemediationSuggestion> {
    let mut by_key: BTreeMap<(String, String, RootCauseCategory), Vec<&RootCause>> = BTreeMap::new();
    for c in causes {
        if matches!(c.category, RootCauseCategory::UnmappedMessage | RootCauseCategory::DialogDesign) {
            let msg = c.bot_message.clone().unwrap_or_default();
            by_key.entry((c.dialog.clone(), msg, c.category)).or_default().push(c);
        }
    }
    let mut out: Vec<(usize, RemediationSuggestion)> = by_key
        .into_iter()
        .map(|((dialog, msg, category), cs)| {
            let rationale = match category {
                RootCauseCategory::UnmappedMessage => format!(
                    "bot message {msg:?} in {dialog} is not in the dialog-act map; add it to the map or fix the dialog"
                ),
                _ => format!("{}; review the flow of {dialog}", cs[0].explanation),
            };
            let s = RemediationSuggestion {
                kind: SuggestionKind::ReviewDialogDesign,
                intent: intent_of_dialog.get(&dialog).cloned().unwrap_or_else(|| dialog.clone()),
                origin_utterance: String::new(),
                target_intent: None,
                evidence: Evidence {
                    queries: vec![],
                    episode_ids: cs.iter().map(|c| c.goal_id.clone()).collect(),
                    predicted_counts: BTreeMap::new(),
                },
                rationale,
            };
            (cs.len(), s)
        })
        .collect();
    out.sort_by_key(|e| std::cmp::Reverse(e.0));
    out.into_iter().map(|(_, s)| s).collect()
}

/// Re-requested entities per slot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NerFinding {
    pub slot: String,
    pub dialogs: Vec<String>,
    pub count: usize,
    /// Values the bot failed to take, with how often.
    pub failing_values: BTreeMap<String, usize>,
    pub episode_ids: Vec<String>,
}

pub fn ner_findings(causes: &[RootCause]) -> Vec<NerFinding> {
    let mut by_slot: BTreeMap<String, NerFinding> = BTreeMap::new();
    for c in causes.iter().filter(|c| c.category == RootCauseCategory::NerError) {
        let slot = c.slot.clone().unwrap_or_default();
        let f = by_slot.entry(slot.clone()).or_insert_with(|| NerFinding {
            slot,
            dialogs: vec![],
            count: 0,
            failing_values: BTreeMap::new(),
            episode_ids: vec![],
        });
        f.count += 1;
        if !f.dialogs.contains(&c.dialog) {
            f.dialogs.push(c.dialog.clone());
            f.dialogs.sort();
        }
        *f.failing_values.entry(c.value.clone().unwrap_or_default()).or_insert(0) += 1;
        f.episode_ids.push(c.goal_id.clone());
    }
    let mut out: Vec<NerFinding> = by_slot.into_values().collect();
    out.sort_by_key(|f| std::cmp::Reverse(f.count));
    out
}
