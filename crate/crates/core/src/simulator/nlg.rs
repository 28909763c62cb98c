//! Template-based NLG for user dialog acts.

use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::agenda::{UserActKind, UserDialogAct};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NlgError {
    #[error("no template for {0}")]
    MissingTemplate(String),
    #[error("invalid template set: {0}")]
    Invalid(String),
}

/// Surface templates keyed by act kind (`inform_slot`) or kind plus slot
/// (`inform_slot:Email`). `{value}` is replaced by the act's value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ResponseTemplateSet {
    pub templates: BTreeMap<String, Vec<String>>,
}

const BUNDLED_TEMPLATES: &str = include_str!("../../data/templates.json");

impl Default for ResponseTemplateSet {
    fn default() -> Self {
        serde_json::from_str(BUNDLED_TEMPLATES).expect("bundled templates are valid")
    }
}

impl ResponseTemplateSet {
    pub fn from_json(bytes: &[u8]) -> Result<Self, NlgError> {
        let set: Self = serde_json::from_slice(bytes).map_err(|e| NlgError::Invalid(e.to_string()))?;
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<(), NlgError> {
        for kind in UserActKind::ALL {
            match self.templates.get(kind.as_str()) {
                Some(list) if !list.is_empty() => {}
                _ => return Err(NlgError::MissingTemplate(kind.as_str().to_owned())),
            }
        }
        if self.templates[UserActKind::InformIntent.as_str()] != ["{value}"] {
            return Err(NlgError::Invalid("inform_intent must be the passthrough template \"{value}\"".into()));
        }
        if let Some((k, _)) = self.templates.iter().find(|(_, v)| v.is_empty()) {
            return Err(NlgError::Invalid(format!("{k} has no templates")));
        }
        Ok(())
    }

    fn lookup(&self, act: &UserDialogAct) -> Option<&[String]> {
        let slot_key = act.slot.as_ref().map(|s| format!("{}:{s}", act.kind.as_str()));
        slot_key
            .and_then(|k| self.templates.get(&k))
            .or_else(|| self.templates.get(act.kind.as_str()))
            .filter(|v| !v.is_empty())
            .map(Vec::as_slice)
    }
}

/// Turns a user act into text. `inform_intent` returns the query verbatim;
/// other kinds use a seeded uniform choice among their templates.
pub fn realize(act: &UserDialogAct, templates: &ResponseTemplateSet, seed: u64) -> Result<String, NlgError> {
    if act.kind == UserActKind::InformIntent {
        return Ok(act.value.clone().unwrap_or_default());
    }
    let options = templates
        .lookup(act)
        .ok_or_else(|| NlgError::MissingTemplate(act.kind.as_str().to_owned()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let template = options.choose(&mut rng).expect("non-empty template list");
    Ok(template.replace("{value}", act.value.as_deref().unwrap_or_default()))
}
