//! Platform-neutral bot definitions.
//!
//! A bot is a list of dialogs, each an ordered list of message steps with an
//! action annotation (`Say`, `Collect`, `Confirm`) plus transitions to other
//! dialogs. Intents route the first user query to an entry dialog.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text;

pub const SCHEMA_VERSION: u32 = 1;

/// Placeholders that may appear in message text without naming an entity.
pub const BUILTIN_PLACEHOLDERS: &[&str] = &["user_name", "bot_name", "date", "time"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BotDefinition {
    pub schema_version: u32,
    pub name: String,
    pub dialogs: Vec<DialogDefinition>,
    pub intents: Vec<IntentDefinition>,
    pub entities: Vec<EntityDefinition>,
    pub success_dialogs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DialogDefinition {
    pub name: String,
    pub steps: Vec<MessageStep>,
    #[serde(default)]
    pub transitions: Vec<TransitionRule>,
    #[serde(default)]
    pub is_sub_dialog: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    Say,
    Collect,
    Confirm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MessageStep {
    pub text: String,
    pub action: Action,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slot: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entity_type: Option<String>,
}

impl MessageStep {
    pub fn say(text: impl Into<String>) -> Self {
        Self { text: text.into(), action: Action::Say, slot: None, entity_type: None }
    }

    pub fn collect(text: impl Into<String>, entity: impl Into<String>) -> Self {
        let entity = entity.into();
        Self {
            text: text.into(),
            action: Action::Collect,
            slot: Some(entity.clone()),
            entity_type: Some(entity),
        }
    }

    pub fn confirm(text: impl Into<String>, slot: impl Into<String>) -> Self {
        Self { text: text.into(), action: Action::Confirm, slot: Some(slot.into()), entity_type: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Always,
    OnSuccess,
    OnFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionRule {
    pub target: String,
    pub condition: Condition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntentDefinition {
    pub name: String,
    pub entry_dialog: String,
    pub training_utterances: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityKind {
    Email,
    Number,
    AlphanumericId,
    FreeText,
    Enumeration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntityDefinition {
    pub name: String,
    pub kind: EntityKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<String>>,
}

/// Machine-readable violation codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ViolationCode {
    UnsupportedSchemaVersion,
    DuplicateDialogName,
    DuplicateIntentName,
    DuplicateEntityName,
    EmptyDialog,
    UnknownTransitionTarget,
    MultipleAlwaysTransitions,
    UnknownSuccessDialog,
    UnknownEntryDialog,
    EmptyTrainingUtterances,
    MissingSlot,
    MissingEntityType,
    UnknownEntity,
    UnknownPlaceholder,
    EmptyEnumeration,
    UnknownIntent,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    /// JSON pointer into the definition document.
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:?} at {}: {}", self.code, self.path, self.message)
    }
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read bot definition: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed JSON at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("document does not match the bot schema: {0}")]
    Schema(String),
    #[error("bot definition failed validation: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Validation(Vec<Violation>),
}

impl LoadError {
    fn from_json(err: serde_json::Error) -> Self {
        use serde_json::error::Category;
        match err.classify() {
            Category::Syntax | Category::Eof => LoadError::Syntax {
                line: err.line(),
                column: err.column(),
                message: err.to_string(),
            },
            Category::Io => LoadError::Io(err.into()),
            Category::Data => LoadError::Schema(err.to_string()),
        }
    }
}

/// Intent utterance sidecar: intent name to extra training utterances.
pub type UtteranceSidecar = BTreeMap<String, Vec<String>>;

impl BotDefinition {
    pub fn from_reader(mut reader: impl Read) -> Result<Self, LoadError> {
        let mut buf = Vec::new();
        reader.read_to_end(&mut buf)?;
        Self::from_slice(&buf)
    }

    pub fn from_slice(bytes: &[u8]) -> Result<Self, LoadError> {
        Self::from_slice_with_utterances(bytes, None)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, LoadError> {
        Self::from_slice(&fs::read(path)?)
    }

    /// Parses a definition and merges a sidecar of intent utterances before
    /// validating.
    pub fn from_slice_with_utterances(
        bytes: &[u8],
        sidecar: Option<&UtteranceSidecar>,
    ) -> Result<Self, LoadError> {
        let mut def: BotDefinition = serde_json::from_slice(bytes).map_err(LoadError::from_json)?;
        let mut violations = Vec::new();
        if let Some(sidecar) = sidecar {
            violations.extend(def.merge_utterances(sidecar));
        }
        violations.extend(validate(&def));
        if violations.is_empty() {
            Ok(def)
        } else {
            Err(LoadError::Validation(violations))
        }
    }

    /// Appends sidecar utterances to the matching intents, skipping exact
    /// duplicates. Returns violations for sidecar keys naming no intent.
    pub fn merge_utterances(&mut self, sidecar: &UtteranceSidecar) -> Vec<Violation> {
        let mut out = Vec::new();
        for (intent, utterances) in sidecar {
            match self.intents.iter_mut().find(|i| &i.name == intent) {
                Some(def) => {
                    for u in utterances {
                        if !def.training_utterances.contains(u) {
                            def.training_utterances.push(u.clone());
                        }
                    }
                }
                None => out.push(Violation {
                    code: ViolationCode::UnknownIntent,
                    path: format!("/sidecar/{}", escape_pointer(intent)),
                    message: format!("utterance sidecar names unknown intent {intent:?}"),
                }),
            }
        }
        out
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("bot definition serializes")
    }

    pub fn dialog(&self, name: &str) -> Option<&DialogDefinition> {
        self.dialogs.iter().find(|d| d.name == name)
    }

    pub fn entity(&self, name: &str) -> Option<&EntityDefinition> {
        self.entities.iter().find(|e| e.name == name)
    }

    pub fn intent(&self, name: &str) -> Option<&IntentDefinition> {
        self.intents.iter().find(|i| i.name == name)
    }

    /// Intent whose entry dialog is `dialog`, if any.
    pub fn intent_for_dialog(&self, dialog: &str) -> Option<&IntentDefinition> {
        self.intents.iter().find(|i| i.entry_dialog == dialog)
    }

    pub fn is_success_dialog(&self, dialog: &str) -> bool {
        self.success_dialogs.iter().any(|d| d == dialog)
    }

    /// Slot name to the entity type its `Collect` step declares. The first
    /// declaration wins when a slot is collected in several places.
    pub fn collected_slot_types(&self) -> BTreeMap<String, String> {
        let mut out = BTreeMap::new();
        for step in self.dialogs.iter().flat_map(|d| &d.steps) {
            if step.action == Action::Collect {
                if let (Some(slot), Some(ty)) = (&step.slot, &step.entity_type) {
                    out.entry(slot.clone()).or_insert_with(|| ty.clone());
                }
            }
        }
        out
    }
}

fn escape_pointer(s: &str) -> String {
    s.replace('~', "~0").replace('/', "~1")
}

/// Checks every structural invariant. Violations are values; an empty list
/// means the definition is valid.
pub fn validate(def: &BotDefinition) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |code, path: String, message: String| out.push(Violation { code, path, message });

    if def.schema_version != SCHEMA_VERSION {
        push(
            ViolationCode::UnsupportedSchemaVersion,
            "/schema_version".into(),
            format!("expected {SCHEMA_VERSION}, found {}", def.schema_version),
        );
    }

    let dialog_names: BTreeSet<&str> = def.dialogs.iter().map(|d| d.name.as_str()).collect();
    let entity_names: BTreeSet<&str> = def.entities.iter().map(|e| e.name.as_str()).collect();

    let mut seen = BTreeSet::new();
    for (i, d) in def.dialogs.iter().enumerate() {
        if !seen.insert(d.name.as_str()) {
            push(
                ViolationCode::DuplicateDialogName,
                format!("/dialogs/{i}/name"),
                format!("dialog name {:?} is declared more than once", d.name),
            );
        }
    }
    let mut seen = BTreeSet::new();
    for (i, intent) in def.intents.iter().enumerate() {
        if !seen.insert(intent.name.as_str()) {
            push(
                ViolationCode::DuplicateIntentName,
                format!("/intents/{i}/name"),
                format!("intent name {:?} is declared more than once", intent.name),
            );
        }
    }
    let mut seen = BTreeSet::new();
    for (i, e) in def.entities.iter().enumerate() {
        if !seen.insert(e.name.as_str()) {
            push(
                ViolationCode::DuplicateEntityName,
                format!("/entities/{i}/name"),
                format!("entity name {:?} is declared more than once", e.name),
            );
        }
        if e.kind == EntityKind::Enumeration && e.values.as_ref().is_none_or(Vec::is_empty) {
            push(
                ViolationCode::EmptyEnumeration,
                format!("/entities/{i}/values"),
                format!("enumeration entity {:?} declares no values", e.name),
            );
        }
    }

    for (i, d) in def.dialogs.iter().enumerate() {
        if d.steps.is_empty() && d.transitions.is_empty() {
            push(
                ViolationCode::EmptyDialog,
                format!("/dialogs/{i}/steps"),
                format!("dialog {:?} has neither steps nor transitions", d.name),
            );
        }
        let mut always = 0;
        for (j, t) in d.transitions.iter().enumerate() {
            if !dialog_names.contains(t.target.as_str()) {
                push(
                    ViolationCode::UnknownTransitionTarget,
                    format!("/dialogs/{i}/transitions/{j}/target"),
                    format!("transition from {:?} targets undeclared dialog {:?}", d.name, t.target),
                );
            }
            if t.condition == Condition::Always {
                always += 1;
                if always > 1 {
                    push(
                        ViolationCode::MultipleAlwaysTransitions,
                        format!("/dialogs/{i}/transitions/{j}/condition"),
                        format!("dialog {:?} has more than one `always` transition", d.name),
                    );
                }
            }
        }
        for (j, step) in d.steps.iter().enumerate() {
            let base = format!("/dialogs/{i}/steps/{j}");
            match step.action {
                Action::Say => {}
                Action::Collect | Action::Confirm => {
                    match &step.slot {
                        None => push(
                            ViolationCode::MissingSlot,
                            format!("{base}/action"),
                            format!("{:?} step in {:?} names no slot", step.action, d.name),
                        ),
                        Some(slot) if !entity_names.contains(slot.as_str()) => push(
                            ViolationCode::UnknownEntity,
                            format!("{base}/slot"),
                            format!("slot {slot:?} is not a declared entity"),
                        ),
                        Some(_) => {}
                    }
                    if step.action == Action::Collect {
                        match &step.entity_type {
                            None => push(
                                ViolationCode::MissingEntityType,
                                format!("{base}/action"),
                                format!("Collect step in {:?} has no entity_type", d.name),
                            ),
                            Some(ty) if !entity_names.contains(ty.as_str()) => push(
                                ViolationCode::UnknownEntity,
                                format!("{base}/entity_type"),
                                format!("entity_type {ty:?} is not a declared entity"),
                            ),
                            Some(_) => {}
                        }
                    }
                }
            }
            for name in text::placeholders(&step.text) {
                if !entity_names.contains(name) && !BUILTIN_PLACEHOLDERS.contains(&name) {
                    push(
                        ViolationCode::UnknownPlaceholder,
                        format!("{base}/text"),
                        format!("placeholder {{{name}}} is neither an entity nor a built-in"),
                    );
                }
            }
        }
    }

    for (i, s) in def.success_dialogs.iter().enumerate() {
        if !dialog_names.contains(s.as_str()) {
            push(
                ViolationCode::UnknownSuccessDialog,
                format!("/success_dialogs/{i}"),
                format!("success dialog {s:?} is not declared"),
            );
        }
    }

    for (i, intent) in def.intents.iter().enumerate() {
        if !dialog_names.contains(intent.entry_dialog.as_str()) {
            push(
                ViolationCode::UnknownEntryDialog,
                format!("/intents/{i}/entry_dialog"),
                format!("intent {:?} enters undeclared dialog {:?}", intent.name, intent.entry_dialog),
            );
        }
        if intent.training_utterances.is_empty() {
            push(
                ViolationCode::EmptyTrainingUtterances,
                format!("/intents/{i}/training_utterances"),
                format!("intent {:?} has no training utterances", intent.name),
            );
        }
    }

    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> BotDefinition {
        BotDefinition {
            schema_version: SCHEMA_VERSION,
            name: "minimal".into(),
            dialogs: vec![DialogDefinition {
                name: "End_Chat".into(),
                steps: vec![MessageStep::say("Goodbye!")],
                transitions: vec![],
                is_sub_dialog: false,
            }],
            intents: vec![],
            entities: vec![],
            success_dialogs: vec!["End_Chat".into()],
        }
    }

    fn codes(def: &BotDefinition) -> Vec<ViolationCode> {
        validate(def).into_iter().map(|v| v.code).collect()
    }

    #[test]
    fn minimal_bot_is_valid() {
        let def = minimal();
        assert!(validate(&def).is_empty());
        let back = BotDefinition::from_slice(def.to_json_pretty().as_bytes()).unwrap();
        assert_eq!(back, def);
    }

    #[test]
    fn undeclared_transition_target_is_named() {
        let mut def = minimal();
        def.dialogs[0]
            .transitions
            .push(TransitionRule { target: "Nowhere".into(), condition: Condition::Always });
        let err = BotDefinition::from_slice(def.to_json_pretty().as_bytes()).unwrap_err();
        match err {
            LoadError::Validation(v) => {
                assert_eq!(v.len(), 1);
                assert_eq!(v[0].code, ViolationCode::UnknownTransitionTarget);
                assert_eq!(v[0].path, "/dialogs/0/transitions/0/target");
                assert!(v[0].message.contains("Nowhere"));
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_dialog_name() {
        let mut def = minimal();
        def.dialogs.push(def.dialogs[0].clone());
        assert_eq!(codes(&def), vec![ViolationCode::DuplicateDialogName]);
    }

    #[test]
    fn collect_without_entity_type() {
        let mut def = minimal();
        def.entities.push(EntityDefinition { name: "Email".into(), kind: EntityKind::Email, values: None });
        let mut step = MessageStep::collect("May I get your email?", "Email");
        step.entity_type = None;
        def.dialogs[0].steps.push(step);
        assert_eq!(codes(&def), vec![ViolationCode::MissingEntityType]);
    }

    #[test]
    fn other_invariants() {
        let mut def = minimal();
        def.entities.push(EntityDefinition { name: "Status".into(), kind: EntityKind::Enumeration, values: Some(vec![]) });
        def.dialogs[0].steps.push(MessageStep::say("hi {nobody}"));
        def.dialogs[0].steps.push(MessageStep::confirm("is it {Status}?", "Ghost"));
        def.dialogs.push(DialogDefinition {
            name: "Router".into(),
            steps: vec![],
            transitions: vec![],
            is_sub_dialog: false,
        });
        def.intents.push(IntentDefinition { name: "X".into(), entry_dialog: "Missing".into(), training_utterances: vec![] });
        def.success_dialogs.push("Gone".into());
        let mut got = codes(&def);
        got.sort();
        assert_eq!(
            got,
            vec![
                ViolationCode::EmptyDialog,
                ViolationCode::UnknownSuccessDialog,
                ViolationCode::UnknownEntryDialog,
                ViolationCode::EmptyTrainingUtterances,
                ViolationCode::UnknownEntity,
                ViolationCode::UnknownPlaceholder,
                ViolationCode::EmptyEnumeration,
            ]
        );
    }

    #[test]
    fn syntax_and_schema_errors_are_distinguished() {
        assert!(matches!(BotDefinition::from_slice(b"{\"name\": "), Err(LoadError::Syntax { .. })));
        let unknown_field = br#"{"schema_version":1,"name":"x","dialogs":[],"intents":[],"entities":[],"success_dialogs":[],"extra":1}"#;
        assert!(matches!(BotDefinition::from_slice(unknown_field), Err(LoadError::Schema(_))));
        let missing = br#"{"schema_version":1,"name":"x"}"#;
        assert!(matches!(BotDefinition::from_slice(missing), Err(LoadError::Schema(_))));
    }

    #[test]
    fn sidecar_utterances_merge() {
        let mut def = minimal();
        def.intents.push(IntentDefinition {
            name: "EC".into(),
            entry_dialog: "End_Chat".into(),
            training_utterances: vec![],
        });
        let bytes = def.to_json_pretty();
        assert!(BotDefinition::from_slice(bytes.as_bytes()).is_err());
        let sidecar: UtteranceSidecar =
            [("EC".to_string(), vec!["bye".to_string(), "bye".to_string()])].into();
        let merged = BotDefinition::from_slice_with_utterances(bytes.as_bytes(), Some(&sidecar)).unwrap();
        assert_eq!(merged.intents[0].training_utterances, vec!["bye"]);

        let bad: UtteranceSidecar = [("Nope".to_string(), vec!["x".to_string()])].into();
        let err = BotDefinition::from_slice_with_utterances(bytes.as_bytes(), Some(&bad)).unwrap_err();
        assert!(matches!(err, LoadError::Validation(v) if v.iter().any(|v| v.code == ViolationCode::UnknownIntent)));
    }
}
