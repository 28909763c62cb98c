//! Human revision of inferred act maps and ontology values.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::act_map::{push_unique, DialogActMap};
use super::ontology::Ontology;
use super::GeneratorError;

/// Patch-style overrides keyed by dialog.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RevisionDocument {
    #[serde(default)]
    pub dialogs: BTreeMap<String, DialogRevision>,
    /// dialog → entity → replacement values
    #[serde(default)]
    pub ontology: BTreeMap<String, BTreeMap<String, Vec<String>>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DialogRevision {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intent_success_message: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dialog_success_message: Option<Vec<String>>,
    /// act → candidates to append
    #[serde(default)]
    pub add_entries: BTreeMap<String, Vec<String>>,
    /// act → candidates to drop; an empty list drops the whole act
    #[serde(default)]
    pub remove_entries: BTreeMap<String, Vec<String>>,
}

fn unknown(what: String) -> GeneratorError {
    GeneratorError::UnknownTarget(what)
}

/// Applies the parts of `rev` addressed to `map.dialog`. The result is
/// marked revised even when nothing changed.
pub fn apply_revisions(
    map: &DialogActMap,
    ontology: &Ontology,
    rev: &RevisionDocument,
) -> Result<(DialogActMap, Ontology), GeneratorError> {
    let mut map = map.clone();
    let mut ontology = ontology.clone();
    if let Some(dr) = rev.dialogs.get(&map.dialog) {
        apply_dialog(&mut map, dr)?;
    }
    if let Some(values) = rev.ontology.get(&map.dialog) {
        apply_ontology(&mut ontology, &map.dialog, values)?;
    }
    map.revised = true;
    Ok((map, ontology))
}

/// Applies a revision document to a full set of maps. Every dialog named by
/// the document must be present.
pub fn apply_revision_document(
    maps: &BTreeMap<String, DialogActMap>,
    ontology: &Ontology,
    rev: &RevisionDocument,
) -> Result<(BTreeMap<String, DialogActMap>, Ontology), GeneratorError> {
    for d in rev.dialogs.keys().chain(rev.ontology.keys()) {
        if !maps.contains_key(d) {
            return Err(unknown(format!("dialog {d:?}")));
        }
    }
    let mut ontology = ontology.clone();
    let mut out = BTreeMap::new();
    for (name, map) in maps {
        let (m, o) = apply_revisions(map, &ontology, rev)?;
        ontology = o;
        out.insert(name.clone(), m);
    }
    Ok((out, ontology))
}

fn apply_dialog(map: &mut DialogActMap, dr: &DialogRevision) -> Result<(), GeneratorError> {
    if let Some(list) = &dr.intent_success_message {
        map.intent_success_message = non_empty(list, &map.dialog, "intent_success_message")?;
    }
    if let Some(list) = &dr.dialog_success_message {
        map.dialog_success_message = non_empty(list, &map.dialog, "dialog_success_message")?;
    }
    for (act, remove) in &dr.remove_entries {
        let Some(cands) = map.entries.get_mut(act) else {
            return Err(unknown(format!("act {act:?} in dialog {:?}", map.dialog)));
        };
        if remove.is_empty() {
            map.entries.remove(act);
            continue;
        }
        for c in remove {
            let Some(pos) = cands.iter().position(|x| x == c) else {
                return Err(unknown(format!("candidate {c:?} of act {act:?} in dialog {:?}", map.dialog)));
            };
            cands.remove(pos);
        }
        if cands.is_empty() {
            map.entries.remove(act);
        }
    }
    for (act, add) in &dr.add_entries {
        let list = map.entries.entry(act.clone()).or_default();
        for c in add {
            push_unique(list, c.clone());
        }
        if list.is_empty() {
            map.entries.remove(act);
        }
    }
    Ok(())
}

fn apply_ontology(
    ontology: &mut Ontology,
    dialog: &str,
    values: &BTreeMap<String, Vec<String>>,
) -> Result<(), GeneratorError> {
    let Some(entities) = ontology.dialogs.get_mut(dialog) else {
        return Err(unknown(format!("ontology dialog {dialog:?}")));
    };
    for (entity, vals) in values {
        let Some(slot) = entities.get_mut(entity) else {
            return Err(unknown(format!("ontology entity {entity:?} in dialog {dialog:?}")));
        };
        *slot = non_empty(vals, dialog, entity)?;
    }
    Ok(())
}

fn non_empty(list: &[String], dialog: &str, what: &str) -> Result<Vec<String>, GeneratorError> {
    let mut out = Vec::new();
    for s in list {
        push_unique(&mut out, s.clone());
    }
    if out.is_empty() {
        Err(GeneratorError::InvalidRevision(format!("{what} of dialog {dialog:?} would be empty")))
    } else {
        Ok(out)
    }
}
