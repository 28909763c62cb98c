use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::schema::{Action, BotDefinition, DialogDefinition};
use crate::text;

pub const SAY: &str = "say";
pub const INTENT_SUCCESS: &str = "intent_success_message";
pub const DIALOG_SUCCESS: &str = "dialog_success_message";

pub fn request_act(slot: &str) -> String {
    format!("request_{slot}")
}

pub fn confirm_act(slot: &str) -> String {
    format!("confirm_{slot}")
}

/// Parsed form of a dialog-act name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ActKind<'a> {
    Request(&'a str),
    Confirm(&'a str),
    Say,
    IntentSuccess,
    DialogSuccess,
    Other(&'a str),
}

impl<'a> ActKind<'a> {
    pub fn parse(act: &'a str) -> Self {
        match act {
            SAY => ActKind::Say,
            INTENT_SUCCESS => ActKind::IntentSuccess,
            DIALOG_SUCCESS => ActKind::DialogSuccess,
            _ => {
                if let Some(slot) = act.strip_prefix("request_") {
                    ActKind::Request(slot)
                } else if let Some(slot) = act.strip_prefix("confirm_") {
                    ActKind::Confirm(slot)
                } else {
                    ActKind::Other(act)
                }
            }
        }
    }
}

/// Bot-message candidates per dialog act for one dialog. This is the
/// simulator's NLU lookup table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DialogActMap {
    pub dialog: String,
    pub entries: BTreeMap<String, Vec<String>>,
    pub intent_success_message: Vec<String>,
    pub dialog_success_message: Vec<String>,
    pub revised: bool,
}

impl DialogActMap {
    pub fn empty(dialog: impl Into<String>) -> Self {
        Self {
            dialog: dialog.into(),
            entries: BTreeMap::new(),
            intent_success_message: Vec::new(),
            dialog_success_message: Vec::new(),
            revised: false,
        }
    }

    /// Adds a candidate unless already present under `act`.
    pub fn add(&mut self, act: &str, candidate: impl Into<String>) {
        push_unique(self.entries.entry(act.to_owned()).or_default(), candidate.into());
    }

    /// Slots this dialog requests from the user, in act-name order.
    pub fn requested_slots(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().filter_map(|act| match ActKind::parse(act) {
            ActKind::Request(slot) => Some(slot),
            _ => None,
        })
    }

    /// Every (act, candidate) pair including the two special acts.
    pub fn candidates(&self) -> impl Iterator<Item = (&str, &str)> {
        let special = self
            .dialog_success_message
            .iter()
            .map(|c| (DIALOG_SUCCESS, c.as_str()))
            .chain(self.intent_success_message.iter().map(|c| (INTENT_SUCCESS, c.as_str())));
        special.chain(
            self.entries
                .iter()
                .flat_map(|(act, cands)| cands.iter().map(move |c| (act.as_str(), c.as_str()))),
        )
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("act map serializes")
    }
}

pub(crate) fn push_unique(list: &mut Vec<String>, item: String) {
    if !list.contains(&item) {
        list.push(item);
    }
}

/// Local map of one dialog: one act per step, placeholders replaced by
/// wildcards.
pub fn local_map(dialog: &DialogDefinition) -> DialogActMap {
    let mut map = DialogActMap::empty(&dialog.name);
    for step in &dialog.steps {
        let candidate = text::strip_placeholders(&step.text);
        let act = match (step.action, step.slot.as_deref()) {
            (Action::Collect, Some(slot)) => request_act(slot),
            (Action::Confirm, Some(slot)) => confirm_act(slot),
            _ => SAY.to_owned(),
        };
        map.add(&act, candidate);
    }
    map
}

/// Local dialog-act maps of every dialog in the definition.
pub fn parse_local_maps(def: &BotDefinition) -> BTreeMap<String, DialogActMap> {
    def.dialogs.iter().map(|d| (d.name.clone(), local_map(d))).collect()
}
