//! Agenda-based user policy.
//!
//! The agenda is a stack of pending user acts built from the goal: the
//! intent query on top, one slot inform per goal slot below it, and a
//! closing `bye` at the bottom. Bot dialog acts pop or trigger entries.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::nlu::NluMatch;
use crate::generator::{ActKind, SimulationGoal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UserActKind {
    InformIntent,
    InformSlot,
    ConfirmAffirm,
    Bye,
}

impl UserActKind {
    pub const ALL: [UserActKind; 4] =
        [UserActKind::InformIntent, UserActKind::InformSlot, UserActKind::ConfirmAffirm, UserActKind::Bye];

    pub fn as_str(self) -> &'static str {
        match self {
            UserActKind::InformIntent => "inform_intent",
            UserActKind::InformSlot => "inform_slot",
            UserActKind::ConfirmAffirm => "confirm_affirm",
            UserActKind::Bye => "bye",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserDialogAct {
    pub kind: UserActKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slot: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<String>,
}

impl UserDialogAct {
    pub fn inform_intent(query: impl Into<String>) -> Self {
        Self { kind: UserActKind::InformIntent, slot: None, value: Some(query.into()) }
    }

    pub fn inform_slot(slot: impl Into<String>, value: impl Into<String>) -> Self {
        Self { kind: UserActKind::InformSlot, slot: Some(slot.into()), value: Some(value.into()) }
    }

    pub fn confirm_affirm(slot: Option<String>) -> Self {
        Self { kind: UserActKind::ConfirmAffirm, slot, value: None }
    }

    pub fn bye() -> Self {
        Self { kind: UserActKind::Bye, slot: None, value: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    InProgress,
    Success,
    IntentError,
    NerError,
    OtherError,
    MaxTurnsExceeded,
    /// The chat transport failed; excluded from metrics.
    Aborted,
}

impl Outcome {
    pub fn is_terminal(self) -> bool {
        self != Outcome::InProgress
    }

    pub fn is_error(self) -> bool {
        matches!(
            self,
            Outcome::IntentError | Outcome::NerError | Outcome::OtherError | Outcome::MaxTurnsExceeded
        )
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PolicyError {
    #[error("episode already ended with {0:?}")]
    IllegalState(Outcome),
}

/// Why an episode ended in `other_error`, kept for root-cause analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OtherErrorCause {
    UnmatchedMessage,
    UnexpectedRequest,
    SessionClosed,
    Stalled,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgendaState {
    /// Pending acts; the last element is the top of the stack.
    pub agenda: Vec<UserDialogAct>,
    pub goal: SimulationGoal,
    pub informed: BTreeMap<String, String>,
    pub turn_index: usize,
    pub max_turns: usize,
    pub outcome: Outcome,
    pub predicted_intent: Option<String>,
    pub error_turn: Option<usize>,
    pub other_cause: Option<OtherErrorCause>,
}

impl AgendaState {
    pub fn new(goal: SimulationGoal, max_turns: usize) -> Self {
        let mut agenda = vec![UserDialogAct::bye()];
        for (slot, value) in goal.inform_slots.iter().rev() {
            agenda.push(UserDialogAct::inform_slot(slot, value));
        }
        agenda.push(UserDialogAct::inform_intent(&goal.intent_query));
        Self {
            agenda,
            goal,
            informed: BTreeMap::new(),
            turn_index: 0,
            max_turns: max_turns.max(1),
            outcome: Outcome::InProgress,
            predicted_intent: None,
            error_turn: None,
            other_cause: None,
        }
    }

    pub fn intent_confirmed(&self) -> bool {
        self.predicted_intent.is_some()
    }

    fn fail(mut self, outcome: Outcome) -> Self {
        self.outcome = outcome;
        self.error_turn = Some(self.turn_index);
        self
    }

    fn fail_other(self, cause: OtherErrorCause) -> Self {
        let mut s = self.fail(Outcome::OtherError);
        s.other_cause = Some(cause);
        s
    }

    /// Pops the intent inform from the top of the agenda, if still there.
    fn take_intent(&mut self) -> Option<UserDialogAct> {
        let pos = self.agenda.iter().rposition(|a| a.kind == UserActKind::InformIntent)?;
        Some(self.agenda.remove(pos))
    }

    /// First turn: the user opens with the intent query.
    pub fn open(mut self) -> (Vec<UserDialogAct>, Self) {
        let acts = self.take_intent().into_iter().collect();
        (acts, self)
    }

    /// Applies the policy rules for one matched bot message.
    ///
    /// `owner_intent` names the intent of the dialog that owns a foreign
    /// `intent_success_message` match.
    pub fn next_user_acts(
        mut self,
        m: &NluMatch<f64>,
        owner_intent: Option<&str>,
    ) -> Result<(Vec<UserDialogAct>, Self), PolicyError> {
        if self.outcome.is_terminal() {
            return Err(PolicyError::IllegalState(self.outcome));
        }
        if self.turn_index == 0 {
            return Ok(self.open());
        }
        if m.is_unmatched() {
            return Ok((vec![], self.fail_other(OtherErrorCause::UnmatchedMessage)));
        }
        let acts = match ActKind::parse(&m.act) {
            ActKind::IntentSuccess if m.owner.is_some() => {
                self.predicted_intent = owner_intent.map(str::to_owned).or_else(|| m.owner.clone());
                return Ok((vec![], self.fail(Outcome::IntentError)));
            }
            ActKind::IntentSuccess => {
                self.predicted_intent = Some(self.goal.intent.clone());
                self.take_intent();
                vec![]
            }
            ActKind::DialogSuccess => {
                if self.predicted_intent.is_none() {
                    self.predicted_intent = Some(self.goal.intent.clone());
                }
                self.outcome = Outcome::Success;
                self.agenda.clear();
                vec![UserDialogAct::bye()]
            }
            ActKind::Request(slot) => {
                if self.informed.contains_key(slot) {
                    return Ok((vec![], self.fail(Outcome::NerError)));
                }
                let Some(value) = self.goal.inform_slots.get(slot).cloned() else {
                    return Ok((vec![], self.fail_other(OtherErrorCause::UnexpectedRequest)));
                };
                self.agenda.retain(|a| !(a.kind == UserActKind::InformSlot && a.slot.as_deref() == Some(slot)));
                self.informed.insert(slot.to_owned(), value.clone());
                vec![UserDialogAct::inform_slot(slot, value)]
            }
            ActKind::Confirm(slot) => vec![UserDialogAct::confirm_affirm(Some(slot.to_owned()))],
            ActKind::Say | ActKind::Other(_) => vec![],
        };
        Ok((acts, self))
    }

    /// Ends the current turn. A closed session or a turn with nothing to
    /// say ends the episode; otherwise the turn budget is checked.
    pub fn close_turn(mut self, emitted_any: bool, session_closed: bool) -> Self {
        if self.outcome == Outcome::InProgress && self.turn_index > 0 {
            if session_closed {
                return self.fail_other(OtherErrorCause::SessionClosed);
            }
            if !emitted_any {
                return self.fail_other(OtherErrorCause::Stalled);
            }
            if self.turn_index >= self.max_turns {
                return self.fail(Outcome::MaxTurnsExceeded);
            }
        }
        if self.outcome == Outcome::InProgress {
            self.turn_index += 1;
        }
        self
    }
}
