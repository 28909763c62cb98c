use serde::{Deserialize, Serialize};

use super::RemediationError;
use crate::generator::ActKind;
use crate::simulator::{EpisodeRecord, OtherErrorCause, Outcome, UserActKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RootCauseCategory {
    IntentError,
    NerError,
    UnmappedMessage,
    DialogDesign,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RootCause {
    pub goal_id: String,
    pub dialog: String,
    pub error_turn: usize,
    pub category: RootCauseCategory,
    pub explanation: String,
    /// The bot message at the divergence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bot_message: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slot: Option<String>,
    /// Value the user supplied for `slot`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<String>,
    /// Turn in which the slot was first delivered.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub informed_turn: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicted_intent: Option<String>,
}

impl RootCause {
    fn new(e: &EpisodeRecord, turn: usize, category: RootCauseCategory, explanation: String) -> Self {
        Self {
            goal_id: e.goal_id.clone(),
            dialog: e.goal.dialog.clone(),
            error_turn: turn,
            category,
            explanation,
            bot_message: None,
            slot: None,
            value: None,
            informed_turn: None,
            predicted_intent: e.predicted_intent.clone(),
        }
    }
}

/// Locates the turn where an episode went wrong and classifies why.
pub fn backtrack_root_cause(e: &EpisodeRecord) -> Result<RootCause, RemediationError> {
    if !e.outcome.is_error() {
        return Err(RemediationError::NotAnError(e.goal_id.clone()));
    }
    let last = e.turns.last().map_or(0, |t| t.index);
    let terminal = e.error_turn.unwrap_or(last);

    match e.outcome {
        Outcome::IntentError => {
            // walk back to the turn whose match named a foreign dialog
            let hit = e.turns.iter().rev().find_map(|t| {
                t.matches.iter().find(|m| m.owner.is_some()).map(|m| (t.index, m))
            });
            let (turn, m) = match hit {
                Some((turn, m)) => (turn, Some(m)),
                None => (terminal, None),
            };
            let owner = m.and_then(|m| m.owner.clone()).unwrap_or_default();
            let predicted = e.predicted_intent.clone().unwrap_or_default();
            let mut rc = RootCause::new(
                e,
                turn,
                RootCauseCategory::IntentError,
                format!(
                    "query {:?} for intent {} was routed to {predicted} (dialog {owner})",
                    e.goal.intent_query, e.goal.intent
                ),
            );
            rc.bot_message = m.map(|m| m.bot_message.clone());
            Ok(rc)
        }
        Outcome::NerError => {
            let turn = e.turns.iter().find(|t| t.index == terminal).or(e.turns.last());
            let m = turn.and_then(|t| t.matches.iter().rev().find(|m| matches!(ActKind::parse(&m.act), ActKind::Request(_))));
            let slot = m.and_then(|m| match ActKind::parse(&m.act) {
                ActKind::Request(s) => Some(s.to_owned()),
                _ => None,
            });
            let informed_turn =
                slot.as_deref().filter(|s| e.goal.inform_slots.contains_key(*s)).and_then(|s| informed_at(e, s));
            let value = slot.as_ref().and_then(|s| e.goal.inform_slots.get(s).cloned());
            let mut rc = RootCause::new(
                e,
                terminal,
                RootCauseCategory::NerError,
                format!(
                    "bot asked for {} again after it was given {:?}",
                    slot.as_deref().unwrap_or("a slot"),
                    value.as_deref().unwrap_or_default()
                ),
            );
            rc.bot_message = m.map(|m| m.bot_message.clone());
            rc.slot = slot;
            rc.value = value;
            rc.informed_turn = informed_turn;
            Ok(rc)
        }
        Outcome::OtherError => {
            let turn = e.turns.iter().find(|t| t.index == terminal).or(e.turns.last());
            let unmatched = turn.and_then(|t| t.matches.iter().find(|m| m.is_unmatched()));
            match (e.other_cause, unmatched) {
                (Some(OtherErrorCause::UnmatchedMessage), Some(m)) | (None, Some(m)) => {
                    let mut rc = RootCause::new(
                        e,
                        terminal,
                        RootCauseCategory::UnmappedMessage,
                        format!(
                            "bot message {:?} matches no dialog act of {} (best {:.2} against {:?})",
                            m.bot_message, e.goal.dialog, m.score, m.matched_candidate
                        ),
                    );
                    rc.bot_message = Some(m.bot_message.clone());
                    Ok(rc)
                }
                (cause, _) => {
                    let why = match cause {
                        Some(OtherErrorCause::UnexpectedRequest) => "bot requested a slot the goal does not define",
                        Some(OtherErrorCause::SessionClosed) => "bot closed the conversation before success",
                        Some(OtherErrorCause::Stalled) => "bot turn required no user response",
                        _ => "conversation left the expected flow",
                    };
                    let mut rc = RootCause::new(e, terminal, RootCauseCategory::DialogDesign, why.to_owned());
                    rc.bot_message = turn.and_then(|t| t.bot_messages.last().cloned());
                    Ok(rc)
                }
            }
        }
        Outcome::MaxTurnsExceeded => Ok(RootCause::new(
            e,
            terminal,
            RootCauseCategory::DialogDesign,
            format!("no success after {terminal} turns; the dialog may loop"),
        )),
        _ => Err(RemediationError::NotAnError(e.goal_id.clone())),
    }
}

/// First turn whose agenda snapshot no longer holds the slot's inform.
fn informed_at(e: &EpisodeRecord, slot: &str) -> Option<usize> {
    let pending = |acts: &[crate::simulator::UserDialogAct]| {
        acts.iter().any(|a| a.kind == UserActKind::InformSlot && a.slot.as_deref() == Some(slot))
    };
    e.agenda_trace
        .iter()
        .zip(&e.turns)
        .find(|(agenda, _)| !pending(agenda))
        .map(|(_, t)| t.index)
}
