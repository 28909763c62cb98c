//! Executes a bot definition: routes the first query through the intent
//! model, walks dialog steps, extracts entities and follows transitions.

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::intent_model::{Classification, IntentModel};
use crate::schema::{Action, BotDefinition, Condition, DialogDefinition, EntityKind};
use crate::simulator::{BotReply, ChatClient, TransportError};
use crate::text::{self, derive_seed};

pub const FALLBACK_MESSAGE: &str = "Sorry, I didn't understand that. Could you rephrase?";

/// Bound on dialog hops without user input, guarding against say-only cycles.
const MAX_HOPS: usize = 64;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum RuntimeError {
    #[error("unknown session {0}")]
    UnknownSession(String),
    #[error("session {0} is closed")]
    SessionClosed(String),
    #[error("invalid injection config: {0}")]
    InvalidInjection(String),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ErrorInjectionConfig {
    /// Slot → probability that a successful extraction is discarded.
    pub ner_miss_probability: BTreeMap<String, f64>,
    /// Lowercase query substring → intent the query is routed to.
    pub forced_intent_map: BTreeMap<String, String>,
    pub seed: u64,
}

impl ErrorInjectionConfig {
    pub fn validate(&self, def: &BotDefinition) -> Result<(), RuntimeError> {
        for (slot, p) in &self.ner_miss_probability {
            if !(0.0..=1.0).contains(p) {
                return Err(RuntimeError::InvalidInjection(format!("probability {p} for {slot} not in [0, 1]")));
            }
        }
        for intent in self.forced_intent_map.values() {
            if def.intent(intent).is_none() {
                return Err(RuntimeError::InvalidInjection(format!("unknown intent {intent:?}")));
            }
        }
        Ok(())
    }

    pub fn is_active(&self) -> bool {
        !self.forced_intent_map.is_empty() || self.ner_miss_probability.values().any(|p| *p > 0.0)
    }
}

/// One discarded extraction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InjectionEvent {
    pub hint: String,
    pub dialog: String,
    pub slot: String,
    pub value: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Awaiting {
    Intent,
    Step,
}

#[derive(Debug, Clone)]
pub struct RuntimeSession {
    pub session_id: String,
    pub hint: String,
    pub current_dialog: Option<String>,
    pub pending_step: usize,
    pub collected: BTreeMap<String, String>,
    pub routed_intent: Option<String>,
    pub closed: bool,
    awaiting: Awaiting,
    rng: ChaCha8Rng,
}

/// The reference bot. Safe to share across threads; each session is
/// confined behind its own lock entry.
pub struct MockBotRuntime {
    def: Arc<BotDefinition>,
    model: Arc<IntentModel<f64>>,
    injection: ErrorInjectionConfig,
    sessions: Mutex<HashMap<String, Arc<Mutex<RuntimeSession>>>>,
    next_id: AtomicU64,
    injections: Mutex<Vec<InjectionEvent>>,
    extractors: Extractors,
}

struct Extractors {
    email: Regex,
    number: Regex,
}

impl MockBotRuntime {
    pub fn new(
        def: Arc<BotDefinition>,
        model: Arc<IntentModel<f64>>,
        injection: ErrorInjectionConfig,
    ) -> Result<Self, RuntimeError> {
        injection.validate(&def)?;
        Ok(Self {
            def,
            model,
            injection,
            sessions: Mutex::new(HashMap::new()),
            next_id: AtomicU64::new(1),
            injections: Mutex::new(Vec::new()),
            extractors: Extractors {
                email: Regex::new(r"[A-Za-z0-9._%+-]+@[A-Za-z0-9.-]+\.[A-Za-z]{2,}").expect("valid regex"),
                number: Regex::new(r"\d+").expect("valid regex"),
            },
        })
    }

    pub fn definition(&self) -> &BotDefinition {
        &self.def
    }

    pub fn model(&self) -> &IntentModel<f64> {
        &self.model
    }

    /// Discarded extractions so far, in the order they happened.
    pub fn injection_log(&self) -> Vec<InjectionEvent> {
        self.injections.lock().expect("injection log lock").clone()
    }

    pub fn open_sessions(&self) -> usize {
        self.sessions.lock().expect("session table lock").len()
    }

    pub fn start_session(&self, hint: &str) -> String {
        let n = self.next_id.fetch_add(1, Ordering::Relaxed);
        let session_id = format!("s{n:08}");
        let session = RuntimeSession {
            session_id: session_id.clone(),
            hint: hint.to_owned(),
            current_dialog: None,
            pending_step: 0,
            collected: BTreeMap::new(),
            routed_intent: None,
            closed: false,
            awaiting: Awaiting::Intent,
            rng: ChaCha8Rng::seed_from_u64(derive_seed(self.injection.seed, &["session", hint])),
        };
        self.sessions
            .lock()
            .expect("session table lock")
            .insert(session_id.clone(), Arc::new(Mutex::new(session)));
        session_id
    }

    pub fn end_session(&self, session_id: &str) -> Result<(), RuntimeError> {
        self.sessions
            .lock()
            .expect("session table lock")
            .remove(session_id)
            .map(|_| ())
            .ok_or_else(|| RuntimeError::UnknownSession(session_id.to_owned()))
    }

    pub fn session_snapshot(&self, session_id: &str) -> Option<RuntimeSession> {
        let table = self.sessions.lock().expect("session table lock");
        table.get(session_id).map(|s| s.lock().expect("session lock").clone())
    }

    pub fn step_session(&self, session_id: &str, user_message: &str) -> Result<BotReply, RuntimeError> {
        let handle = self
            .sessions
            .lock()
            .expect("session table lock")
            .get(session_id)
            .cloned()
            .ok_or_else(|| RuntimeError::UnknownSession(session_id.to_owned()))?;
        let mut session = handle.lock().expect("session lock");
        if session.closed {
            return Err(RuntimeError::SessionClosed(session_id.to_owned()));
        }
        let mut out = Vec::new();
        match session.awaiting {
            Awaiting::Intent => match self.route(user_message) {
                Some(intent) => {
                    let entry = self.def.intent(&intent).expect("routed to a known intent").entry_dialog.clone();
                    session.routed_intent = Some(intent);
                    self.enter(&mut session, &entry, &mut out);
                }
                None => out.push(FALLBACK_MESSAGE.to_owned()),
            },
            Awaiting::Step => self.answer(&mut session, user_message, &mut out),
        }
        Ok(BotReply { messages: out, closed: session.closed })
    }

    fn route(&self, query: &str) -> Option<String> {
        let lower = query.to_lowercase();
        if let Some((_, intent)) = self.injection.forced_intent_map.iter().find(|(k, _)| lower.contains(k.as_str())) {
            return Some(intent.clone());
        }
        match self.model.classify(query) {
            Classification::Intent { intent, .. } => Some(intent),
            Classification::Fallback { .. } => None,
        }
    }

    fn dialog(&self, name: &str) -> &DialogDefinition {
        self.def.dialog(name).expect("validated definition references known dialogs")
    }

    fn enter(&self, s: &mut RuntimeSession, dialog: &str, out: &mut Vec<String>) {
        s.current_dialog = Some(dialog.to_owned());
        s.pending_step = 0;
        self.advance(s, out, 0);
    }

    /// Emits messages from the pending step on until the bot needs input
    /// or the conversation ends.
    fn advance(&self, s: &mut RuntimeSession, out: &mut Vec<String>, hops: usize) {
        let name = s.current_dialog.clone().expect("advance needs a current dialog");
        let dialog = self.dialog(&name);
        while let Some(step) = dialog.steps.get(s.pending_step) {
            out.push(self.fill(&step.text, &s.collected));
            match step.action {
                Action::Say => s.pending_step += 1,
                Action::Collect | Action::Confirm => {
                    s.awaiting = Awaiting::Step;
                    return;
                }
            }
        }
        self.finish(s, out, Condition::OnSuccess, hops);
    }

    fn finish(&self, s: &mut RuntimeSession, out: &mut Vec<String>, result: Condition, hops: usize) {
        let name = s.current_dialog.clone().expect("finish needs a current dialog");
        if self.def.is_success_dialog(&name) || hops >= MAX_HOPS {
            s.closed = true;
            return;
        }
        let dialog = self.dialog(&name);
        let next = dialog
            .transitions
            .iter()
            .find(|t| t.condition == Condition::Always)
            .or_else(|| dialog.transitions.iter().find(|t| t.condition == result));
        match next {
            Some(t) => {
                s.current_dialog = Some(t.target.clone());
                s.pending_step = 0;
                self.advance(s, out, hops + 1);
            }
            None => s.closed = true,
        }
    }

    fn answer(&self, s: &mut RuntimeSession, message: &str, out: &mut Vec<String>) {
        let name = s.current_dialog.clone().expect("answer needs a current dialog");
        let step = self.dialog(&name).steps[s.pending_step].clone();
        let slot = step.slot.clone().unwrap_or_default();
        match step.action {
            Action::Collect => {
                let kind = step.entity_type.as_deref().and_then(|e| self.def.entity(e));
                let extracted = kind.and_then(|e| self.extract(message, e.kind, e.values.as_deref()));
                let p = self.injection.ner_miss_probability.get(&slot).copied().unwrap_or(0.0);
                let kept = match extracted {
                    Some(value) if p > 0.0 && s.rng.random::<f64>() < p => {
                        self.injections.lock().expect("injection log lock").push(InjectionEvent {
                            hint: s.hint.clone(),
                            dialog: name.clone(),
                            slot: slot.clone(),
                            value,
                        });
                        None
                    }
                    other => other,
                };
                match kept {
                    Some(value) => {
                        s.collected.insert(slot, value);
                        s.pending_step += 1;
                        self.advance(s, out, 0);
                    }
                    // re-ask with the identical prompt
                    None => out.push(self.fill(&step.text, &s.collected)),
                }
            }
            Action::Confirm => {
                if is_denial(message) {
                    self.finish(s, out, Condition::OnFailure, 0);
                } else {
                    s.pending_step += 1;
                    self.advance(s, out, 0);
                }
            }
            Action::Say => unreachable!("say steps never wait for input"),
        }
    }

    fn extract(&self, message: &str, kind: EntityKind, values: Option<&[String]>) -> Option<String> {
        let message = message.trim();
        match kind {
            EntityKind::Email => self.extractors.email.find(message).map(|m| m.as_str().to_owned()),
            EntityKind::Number => self.extractors.number.find(message).map(|m| m.as_str().to_owned()),
            EntityKind::AlphanumericId => message
                .split_whitespace()
                .map(|w| w.trim_matches(|c: char| !c.is_alphanumeric()))
                .find(|w| w.len() >= 4 && w.chars().all(|c| c.is_ascii_uppercase() || c.is_ascii_digit()))
                .map(str::to_owned),
            EntityKind::Enumeration => {
                let lower = message.to_lowercase();
                let declared = values.unwrap_or_default();
                declared
                    .iter()
                    .find(|v| lower.contains(&v.to_lowercase()))
                    .cloned()
                    .or_else(|| (!message.is_empty()).then(|| message.to_owned()))
            }
            EntityKind::FreeText => (!message.is_empty()).then(|| message.to_owned()),
        }
    }

    fn fill(&self, template: &str, collected: &BTreeMap<String, String>) -> String {
        text::fill_placeholders(template, |name| match name {
            "bot_name" => Some(self.def.name.as_str()),
            "user_name" => Some("there"),
            "date" => Some("today"),
            "time" => Some("now"),
            other => collected.get(other).map(String::as_str),
        })
    }
}

fn is_denial(message: &str) -> bool {
    text::words(message).iter().any(|w| matches!(w.as_str(), "no" | "nope" | "wrong" | "incorrect"))
}

/// Drives a runtime directly, without a network hop.
#[derive(Clone)]
pub struct InProcessClient {
    runtime: Arc<MockBotRuntime>,
}

impl InProcessClient {
    pub fn new(runtime: Arc<MockBotRuntime>) -> Self {
        Self { runtime }
    }

    pub fn runtime(&self) -> &MockBotRuntime {
        &self.runtime
    }
}

impl From<RuntimeError> for TransportError {
    fn from(e: RuntimeError) -> Self {
        match e {
            RuntimeError::UnknownSession(s) => TransportError::UnknownSession(s),
            RuntimeError::SessionClosed(s) => TransportError::SessionClosed(s),
            RuntimeError::InvalidInjection(m) => TransportError::Protocol(m),
        }
    }
}

impl ChatClient for InProcessClient {
    fn start_session(&self, hint: &str) -> Result<String, TransportError> {
        Ok(self.runtime.start_session(hint))
    }

    fn send(&self, session: &str, text: &str) -> Result<BotReply, TransportError> {
        Ok(self.runtime.step_session(session, text)?)
    }

    fn end(&self, session: &str) -> Result<(), TransportError> {
        Ok(self.runtime.end_session(session)?)
    }
}
